import os
import sqlite3
import logging
from appdirs import user_data_dir

log = logging.getLogger(__name__)


class DataDir(object):
    """ This class ensures that the user's settings are stored in its
        OS protected user directory:

        **OSX:**

         * `~/Library/Application Support/<AppName>`

        **Windows:**

         * `C:\\Documents and Settings\\<User>\\Application Data\\Local Settings\\<AppAuthor>\\<AppName>`

        **Linux:**

         * `~/.local/share/<AppName>`

        The location can be overwritten with the ``SWA_DATA_DIR``
        environmental variable or the ``data_dir`` argument.

        :param str data_dir: Directory to keep the database in *(optional)*
    """

    appname = "swa"
    appauthor = "swa"
    storageDatabase = "swa.sqlite"

    def __init__(self, data_dir=None):
        self.data_dir = (
            data_dir or
            os.environ.get("SWA_DATA_DIR") or
            user_data_dir(self.appname, self.appauthor)
        )
        self.sqlDataBaseFile = os.path.join(self.data_dir, self.storageDatabase)
        self.mkdir_p()

    def mkdir_p(self):
        """ Ensure that the directory in which the data is stored
            exists
        """
        if os.path.isdir(self.data_dir):
            return
        else:
            try:
                os.makedirs(self.data_dir)
            except FileExistsError:
                return
            except OSError:
                raise


class Configuration(DataDir):
    """ This is the configuration storage that stores key/value
        pairs in the `config` table of the SQLite3 database. Values
        that have not been set fall back to :attr:`config_defaults`
        and are cast to the type of their default.
    """
    __tablename__ = "config"

    #: Default configuration
    config_defaults = {
        "collapse_threshold": 2.0,
        "conv_layout": "oikk",
        "conv_weighting": "per-matrix",
        "embedding_patterns": "embed,wte,wpe,tok_emb,pos_emb,word_emb,position_emb",
        "embedding_q": 8.0,
        "format": "both",
        "jobs": 0,
        "log_base": "10",
        "log_level": "WARNING",
        "min_size": 50,
        "min_tail": 5,
        "normalize_by_n": False,
        "pair_median_shift": 0.25,
        "pair_threshold": 1.0,
        "short_tail": 20,
        "skip_embeddings": True,
        "zero_tolerance": 1e-10,
    }

    def __init__(self, data_dir=None):
        super(Configuration, self).__init__(data_dir)
        if not self.exists_table():
            self.create_table()

    def _connect(self):
        return sqlite3.connect(self.sqlDataBaseFile)

    def exists_table(self):
        """ Check if the database table exists
        """
        query = ("SELECT name FROM sqlite_master " +
                 "WHERE type='table' AND name=?",
                 (self.__tablename__, ))
        connection = self._connect()
        cursor = connection.cursor()
        cursor.execute(*query)
        return True if cursor.fetchone() else False

    def create_table(self):
        """ Create the new table in the SQLite database
        """
        query = ('CREATE TABLE %s (' % self.__tablename__ +
                 'id INTEGER PRIMARY KEY AUTOINCREMENT,' +
                 'key STRING(256),' +
                 'value STRING(256)' +
                 ')')
        connection = self._connect()
        cursor = connection.cursor()
        cursor.execute(query)
        connection.commit()

    def _haveKey(self, key):
        """ Is the key `key` available in the configuration?
        """
        query = ("SELECT value FROM %s " % (self.__tablename__) +
                 "WHERE key=?",
                 (key,)
                 )
        connection = self._connect()
        cursor = connection.cursor()
        cursor.execute(*query)
        return True if cursor.fetchone() else False

    def _cast(self, key, value):
        default = self.config_defaults.get(key)
        if isinstance(default, bool):
            if isinstance(value, str):
                return value.strip().lower() in ["1", "true", "yes", "on"]
            return bool(value)
        if isinstance(default, int):
            return int(value)
        if isinstance(default, float):
            return float(value)
        return value

    def __getitem__(self, key):
        """ This method behaves differently from regular `dict` in that
            it returns `None` if a key is not found!
        """
        query = ("SELECT value FROM %s " % (self.__tablename__) +
                 "WHERE key=?",
                 (key,)
                 )
        connection = self._connect()
        cursor = connection.cursor()
        cursor.execute(*query)
        result = cursor.fetchone()
        if result:
            value = self._cast(key, result[0])
        else:
            if key in self.config_defaults:
                value = self.config_defaults[key]
            else:
                return None
        # arrays are "," separated (especially for name patterns)
        if isinstance(value, str) and "," in value:
            return value.split(",")
        else:
            return value

    def get(self, key, default=None):
        """ Return the key if exists or a default value
        """
        if key in self:
            return self.__getitem__(key)
        else:
            return default

    def __contains__(self, key):
        if self._haveKey(key) or key in self.config_defaults:
            return True
        else:
            return False

    def __setitem__(self, key, value):
        if isinstance(value, (list, tuple)):
            value = ",".join(str(v) for v in value)
        if self._haveKey(key):
            query = ("UPDATE %s " % self.__tablename__ +
                     "SET value=? WHERE key=?",
                     (str(value), key))
        else:
            query = ("INSERT INTO %s " % self.__tablename__ +
                     "(key, value) VALUES (?, ?)",
                     (key, str(value)))
        connection = self._connect()
        cursor = connection.cursor()
        cursor.execute(*query)
        connection.commit()

    def delete(self, key):
        """ Delete a key from the configuration store
        """
        query = ("DELETE FROM %s " % (self.__tablename__) +
                 "WHERE key=?",
                 (key,))
        connection = self._connect()
        cursor = connection.cursor()
        cursor.execute(*query)
        connection.commit()

    def items(self):
        """ All stored and default settings, stored values first
        """
        query = ("SELECT key, value from %s " % (self.__tablename__))
        connection = self._connect()
        cursor = connection.cursor()
        cursor.execute(query)
        r = dict(self.config_defaults)
        for key, value in cursor.fetchall():
            r[key] = self._cast(key, value)
        return sorted(r.items())

    def __iter__(self):
        return iter([key for key, _ in self.items()])

    def __len__(self):
        query = ("SELECT id from %s " % (self.__tablename__))
        connection = self._connect()
        cursor = connection.cursor()
        cursor.execute(query)
        return len(cursor.fetchall())


# Create configStorage
configStorage = Configuration()
