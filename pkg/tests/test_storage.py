import os
import tempfile
import unittest
from unittest import mock

from swa.config import AnalysisConfig
from swa.exceptions import ConfigError
from swa.storage import Configuration


class Testcases(unittest.TestCase):

    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = self._tmp.name
        self.storage = Configuration(data_dir=os.path.join(self.tmp, "data"))

    def tearDown(self):
        self._tmp.cleanup()

    def test_database(self):
        self.assertTrue(os.path.exists(self.storage.sqlDataBaseFile))
        self.assertTrue(self.storage.exists_table())
        # opening it again keeps the table
        Configuration(data_dir=os.path.join(self.tmp, "data"))

    def test_defaults(self):
        self.assertEqual(self.storage["min_size"], 50)
        self.assertEqual(self.storage["log_base"], "10")
        self.assertIsNone(self.storage["unknown"])
        self.assertEqual(self.storage.get("unknown", "x"), "x")
        self.assertIn("min_tail", self.storage)
        self.assertNotIn("unknown", self.storage)
        self.assertEqual(len(self.storage), 0)

    def test_set_and_delete(self):
        self.storage["min_size"] = "20"
        self.assertEqual(self.storage["min_size"], 20)
        self.storage["min_size"] = 30
        self.assertEqual(self.storage["min_size"], 30)
        self.assertEqual(len(self.storage), 1)
        self.storage["skip_embeddings"] = "false"
        self.assertIs(self.storage["skip_embeddings"], False)
        self.storage.delete("min_size")
        self.assertEqual(self.storage["min_size"], 50)

    def test_lists(self):
        self.assertIn("wte", self.storage["embedding_patterns"])
        self.storage["embedding_patterns"] = ["emb", "tok"]
        self.assertEqual(self.storage["embedding_patterns"], ["emb", "tok"])

    def test_items(self):
        self.storage["min_tail"] = "7"
        items = dict(self.storage.items())
        self.assertEqual(items["min_tail"], 7)
        self.assertEqual(items["min_size"], 50)
        self.assertEqual(list(self.storage), sorted(items))


class AnalysisConfigcases(unittest.TestCase):

    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = self._tmp.name

    def tearDown(self):
        self._tmp.cleanup()

    def config_file(self, text):
        path = os.path.join(self.tmp, "run.yml")
        with open(path, "w") as fp:
            fp.write(text)
        return path

    def test_defaults(self):
        config = AnalysisConfig()
        self.assertEqual(config["min_size"], 50)
        self.assertEqual(config["min_tail"], 5)
        self.assertEqual(config["log_base"], "10")
        self.assertEqual(config["conv_layout"], "oikk")
        self.assertEqual(config["exclude"], [])
        self.assertIsNone(config["order_file"])
        self.assertIs(config["skip_embeddings"], True)
        self.assertEqual(config.min_size, 50)
        with self.assertRaises(AttributeError):
            config.no_such_setting

    def test_kwargs(self):
        config = AnalysisConfig(min_size=20, exclude=["embed.*"], log_base=None)
        self.assertEqual(config["min_size"], 20)
        self.assertEqual(config["exclude"], ["embed.*"])
        self.assertEqual(config["log_base"], "10")

    def test_config_file(self):
        path = self.config_file("min_size: 10\nexclude: ['a.*', 'b.*']\nlog_base: e\n")
        config = AnalysisConfig(config_file=path)
        self.assertEqual(config["min_size"], 10)
        self.assertEqual(config["exclude"], ["a.*", "b.*"])
        self.assertEqual(config["log_base"], "e")
        self.assertEqual(AnalysisConfig(config_file=path, min_size=30)["min_size"], 30)

    def test_config_file_errors(self):
        with self.assertRaises(ConfigError):
            AnalysisConfig(config_file=self.config_file("colour: red\n"))
        with self.assertRaises(ConfigError):
            AnalysisConfig(config_file=self.config_file("- min_size\n"))

    def test_jobs_env(self):
        with mock.patch.dict(os.environ, {"SWA_JOBS": "3"}):
            self.assertEqual(AnalysisConfig()["jobs"], 3)
            self.assertEqual(AnalysisConfig(jobs=1)["jobs"], 1)

    def test_invalid(self):
        for kwargs in [
            {"colour": "red"},
            {"min_size": 1},
            {"min_size": "many"},
            {"min_tail": 1},
            {"jobs": -1},
            {"log_base": "2"},
            {"conv_layout": "iokk"},
            {"zero_tolerance": 1.5},
        ]:
            with self.assertRaises(ConfigError):
                AnalysisConfig(**kwargs)

    def test_echo(self):
        echo = AnalysisConfig(jobs=4, exclude=["x"]).echo()
        self.assertNotIn("jobs", echo)
        self.assertEqual(list(echo), sorted(echo))
        self.assertEqual(echo["exclude"], ["x"])
        self.assertEqual(echo, AnalysisConfig(jobs=1, exclude=["x"]).echo())


if __name__ == '__main__':
    unittest.main()
