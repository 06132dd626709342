import math
import os
import tempfile
import unittest

import numpy as np

from swabase.container import TensorEntry, TensorStore
from swa.exceptions import DegenerateKernel, NoAnalyzableLayers, ConfigError
from swa.extraction import (
    DENSE,
    CONV1D,
    CONV2D,
    ATTENTION,
    EMBEDDING,
    ExtractionConfig,
    LayerMatrix,
    classify_tensor,
    conv_rescale_factor,
    extract_layer_matrices,
    load_order_file,
    slice_conv2d,
    traversal_order,
)


def entry(*shape, seed=0):
    rng = np.random.default_rng(seed)
    return TensorEntry("F64", list(shape), rng.normal(size=int(np.prod(shape))))


class Testcases(unittest.TestCase):

    def test_orientation(self):
        m = LayerMatrix("m", "fc", 0, DENSE, np.ones((3, 7)))
        self.assertEqual((m.n_rows, m.n_cols), (7, 3))
        self.assertAlmostEqual(m.aspect_ratio, 7 / 3)
        self.assertEqual(m.provenance()["N"], 7)

    def test_rescale_factor(self):
        self.assertAlmostEqual(conv_rescale_factor(3, 3), 3 / math.sqrt(2))
        self.assertAlmostEqual(conv_rescale_factor(1, 1), 1 / math.sqrt(2))

    def test_slice_conv2d(self):
        kernel = np.arange(2 * 3 * 2 * 2, dtype=float).reshape(2, 3, 2, 2)
        slices = slice_conv2d(kernel)
        self.assertEqual(len(slices), 4)
        factor = conv_rescale_factor(2, 2)
        # row-major kernel positions
        np.testing.assert_allclose(slices[1], kernel[:, :, 0, 1] * factor)
        np.testing.assert_allclose(slices[2], kernel[:, :, 1, 0] * factor)

    def test_slice_conv2d_non_square(self):
        slices = slice_conv2d(entry(8, 4, 3, 5))
        self.assertEqual(len(slices), 15)
        self.assertTrue(all(s.shape == (8, 4) for s in slices))
        store = TensorStore({"conv.weight": entry(8, 4, 3, 5)})
        layers = extract_layer_matrices(store, ExtractionConfig(min_matrix_dim=2))
        self.assertEqual(len(layers), 15)
        self.assertAlmostEqual(layers[0].rescale_factor, math.sqrt(15) / math.sqrt(2))
        self.assertEqual((layers[14].n_rows, layers[14].n_cols), (8, 4))

    def test_slice_conv2d_ones(self):
        slices = slice_conv2d(np.ones((8, 4, 3, 3)))
        self.assertEqual(len(slices), 9)
        for s in slices:
            self.assertEqual(s.shape, (8, 4))
            np.testing.assert_allclose(s, np.full((8, 4), 3 / math.sqrt(2)))

    def test_slice_conv2d_pointwise(self):
        kernel = entry(8, 4, 1, 1)
        slices = slice_conv2d(kernel)
        self.assertEqual(len(slices), 1)
        np.testing.assert_allclose(slices[0], kernel.values[:, :, 0, 0] / math.sqrt(2))

    def test_slice_conv2d_kkio(self):
        kernel = np.arange(2 * 3 * 3 * 5, dtype=float).reshape(3, 3, 5, 2)
        slices = slice_conv2d(kernel, layout="kkio")
        self.assertEqual(len(slices), 9)
        self.assertEqual(slices[0].shape, (2, 5))
        np.testing.assert_allclose(slices[4], kernel[1, 1].T * 3 / math.sqrt(2))

    def test_degenerate_kernel(self):
        with self.assertRaises(DegenerateKernel):
            slice_conv2d(np.zeros((4, 4, 0, 3)))

    def test_classify(self):
        config = ExtractionConfig()
        self.assertEqual(classify_tensor("fc1.weight", [100, 60], config), DENSE)
        self.assertEqual(classify_tensor("layer.0.attn.q_proj.weight", [64, 64], config), ATTENTION)
        self.assertEqual(classify_tensor("embed.tokens", [5000, 64], config), EMBEDDING)
        # square embedding-named tensors are ordinary matrices
        self.assertEqual(classify_tensor("embed.proj", [64, 64], config), DENSE)
        self.assertEqual(classify_tensor("conv1.weight", [64, 32, 3, 3], config), CONV2D)
        self.assertEqual(classify_tensor("conv1d.weight", [64, 32, 1], config), CONV1D)
        self.assertIsNone(classify_tensor("conv1d.weight", [64, 32, 5], config))

    def test_identity_extraction(self):
        store = TensorStore({"fc.weight": TensorEntry("F64", [3, 3], np.eye(3).ravel())})
        layers = extract_layer_matrices(store, ExtractionConfig(min_matrix_dim=2))
        self.assertEqual(len(layers), 1)
        np.testing.assert_array_equal(layers[0].values, np.eye(3))
        self.assertEqual(layers[0].kind, DENSE)

    def test_dense_transposed(self):
        tensor = entry(64, 128)
        layers = extract_layer_matrices(TensorStore({"fc.weight": tensor}))
        self.assertEqual(len(layers), 1)
        self.assertEqual((layers[0].n_rows, layers[0].n_cols), (128, 64))
        np.testing.assert_array_equal(layers[0].values, tensor.values.T)

    def test_large_conv_extraction(self):
        layers = extract_layer_matrices(TensorStore({"conv.weight": entry(256, 128, 3, 3)}))
        self.assertEqual(len(layers), 9)
        self.assertTrue(all((l.n_rows, l.n_cols) == (256, 128) for l in layers))

    def test_conv_extraction(self):
        store = TensorStore({"conv.weight": entry(64, 64, 3, 3)})
        layers = extract_layer_matrices(store, ExtractionConfig(min_matrix_dim=50))
        self.assertEqual(len(layers), 9)
        self.assertEqual([l.slice_index for l in layers], list(range(9)))
        self.assertTrue(all(l.layer_id == 0 for l in layers))
        self.assertAlmostEqual(layers[0].rescale_factor, 3 / math.sqrt(2))

    def test_skip_reasons(self):
        store = TensorStore({
            "fc.bias": entry(100),
            "small.weight": entry(10, 10),
            "embed.tokens": entry(500, 60),
            "odd.weight": entry(60, 60, 5),
            "fc.weight": entry(100, 60),
        })
        layers = extract_layer_matrices(
            store, ExtractionConfig(exclude_patterns=["embed.*"]))
        self.assertEqual([l.layer_name for l in layers], ["fc.weight"])
        reasons = {s["tensor"]: s["reason"] for s in layers.skipped}
        self.assertEqual(reasons, {
            "fc.bias": "bias-or-scalar",
            "small.weight": "too-small",
            "embed.tokens": "excluded-by-pattern",
            "odd.weight": "unsupported-rank",
        })

    def test_include(self):
        store = TensorStore({"a.weight": entry(60, 60), "b.weight": entry(60, 60, seed=1)})
        layers = extract_layer_matrices(store, ExtractionConfig(include_patterns=["^b"]))
        self.assertEqual([l.layer_name for l in layers], ["b.weight"])
        self.assertEqual(layers.skipped, [{"tensor": "a.weight", "reason": "not-included"}])

    def test_nothing_to_analyze(self):
        store = TensorStore({"fc.bias": entry(10)})
        with self.assertRaises(NoAnalyzableLayers):
            extract_layer_matrices(store)

    def test_traversal_order(self):
        names = ["c", "a", "b", "d"]
        self.assertEqual(traversal_order(names), ["a", "b", "c", "d"])
        self.assertEqual(traversal_order(names, ["d", "b", "x"]), ["d", "b", "a", "c"])

    def test_order_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "order.yml")
            with open(path, "w") as fp:
                fp.write("- fc2.weight\n- fc1.weight\n")
            self.assertEqual(load_order_file(path), ["fc2.weight", "fc1.weight"])
            with open(path, "w") as fp:
                fp.write("order: [b, a]\n")
            self.assertEqual(load_order_file(path), ["b", "a"])
            with self.assertRaises(ConfigError):
                load_order_file(os.path.join(tmp, "missing.yml"))

    def test_layer_ids_follow_order(self):
        store = TensorStore({"fc1.weight": entry(60, 60), "fc2.weight": entry(60, 60, seed=1)})
        layers = extract_layer_matrices(store, order=["fc2.weight", "fc1.weight"])
        self.assertEqual([(l.layer_name, l.layer_id) for l in layers],
                         [("fc2.weight", 0), ("fc1.weight", 1)])

    def test_invalid_config(self):
        with self.assertRaises(ConfigError):
            ExtractionConfig(min_matrix_dim=1)
        with self.assertRaises(ConfigError):
            ExtractionConfig(conv_kernel_axes="iokk")


if __name__ == '__main__':
    unittest.main()
