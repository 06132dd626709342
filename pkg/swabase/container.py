import hashlib
import json
import logging
import os
import struct
import tempfile
from collections import OrderedDict

import numpy as np

from .dtypes import known_dtypes, max_rank, metadata_key
from .exceptions import (
    MalformedHeader,
    OverlappingRanges,
    TruncatedData,
    UnsupportedDtype,
    NonFiniteValue,
    UnrepresentableValue,
)

log = logging.getLogger(__name__)

#: Length of the little-endian header size prefix
prefix_size = 8

#: The header is padded with spaces to a multiple of this
header_alignment = 8


def _is_int(value):
    return isinstance(value, int) and not isinstance(value, bool)


def _unique_keys(pairs):
    """ JSON object hook that rejects repeated keys
    """
    result = OrderedDict()
    for key, value in pairs:
        if key in result:
            raise MalformedHeader("Header repeats the key %s" % key)
        result[key] = value
    return result


class TensorEntry(object):
    """ A single named tensor as stored in the container. Values are
        always kept as 64-bit floats, regardless of the dtype they are
        stored with.

        :param str dtype: One of ``F16``, ``F32``, ``F64``
        :param list shape: Non-negative dimensions (rank 0 to 4)
        :param array values: Anything numpy can turn into a float array
            of the given shape
        :param str name: Name of the tensor (for error reporting)
    """
    def __init__(self, dtype, shape, values, name=None):
        if dtype not in known_dtypes:
            raise UnsupportedDtype("Unsupported dtype %r" % (dtype,))
        shape = list(shape)
        if len(shape) > max_rank:
            raise MalformedHeader("Rank %d exceeds %d" % (len(shape), max_rank))
        if not all(_is_int(d) and d >= 0 for d in shape):
            raise MalformedHeader("Invalid shape %r" % (shape,))

        self.name = name
        self.dtype = dtype
        self.shape = shape
        values = np.asarray(values, dtype=np.float64)
        try:
            self.values = values.reshape(shape)
        except ValueError:
            raise MalformedHeader(
                "%d values do not fit shape %r" % (values.size, shape))
        if not np.all(np.isfinite(self.values)):
            raise NonFiniteValue(name)
        with np.errstate(over="ignore"):
            stored = self.values.astype(known_dtypes[dtype]["numpy"])
        if not np.all(np.isfinite(stored)):
            raise UnrepresentableValue(name, dtype)
        self.values.setflags(write=False)

    @property
    def rank(self):
        return len(self.shape)

    @property
    def nbytes(self):
        return int(np.prod(self.shape, dtype=np.int64)) * known_dtypes[self.dtype]["width"]

    def tobytes(self):
        """ Little-endian raw data of the tensor in its own dtype
        """
        return self.values.astype(known_dtypes[self.dtype]["numpy"]).tobytes()

    def __eq__(self, other):
        if not isinstance(other, TensorEntry):
            return NotImplemented
        return (self.dtype == other.dtype and
                self.shape == other.shape and
                np.array_equal(self.values, other.values))

    def __ne__(self, other):
        result = self.__eq__(other)
        if result is NotImplemented:
            return result
        return not result

    def __repr__(self):
        return "<TensorEntry %s %s %r>" % (self.name, self.dtype, self.shape)


class TensorStore(dict):
    """ Parsed weight container. Maps tensor names to
        :class:`TensorEntry` instances.

        :param dict tensors: name -> TensorEntry
        :param dict metadata: Optional string map
        :param str digest: sha256 of the file the store was read from
    """
    def __init__(self, tensors=None, metadata=None, digest=None):
        super(TensorStore, self).__init__(tensors or {})
        self.metadata = dict(metadata or {})
        self.digest = digest
        for name, entry in self.items():
            if entry.name is None:
                entry.name = name

    def names(self):
        """ Tensor names in canonical (sorted) order
        """
        return sorted(self.keys())

    def __eq__(self, other):
        if not isinstance(other, TensorStore):
            return NotImplemented
        return (self.metadata == other.metadata and
                dict.__eq__(self, other))

    def __ne__(self, other):
        result = self.__eq__(other)
        if result is NotImplemented:
            return result
        return not result


def _parse_entry(name, meta, data_length):
    if not isinstance(meta, dict):
        raise MalformedHeader("Invalid header entry for %s" % name)
    for key in ["dtype", "shape", "data_offsets"]:
        if key not in meta:
            raise MalformedHeader("Header entry %s lacks %s" % (name, key))

    dtype = meta["dtype"]
    if dtype not in known_dtypes:
        raise UnsupportedDtype("Tensor %s has unsupported dtype %r" % (name, dtype))

    shape = meta["shape"]
    if (not isinstance(shape, list) or len(shape) > max_rank or
            not all(_is_int(d) and d >= 0 for d in shape)):
        raise MalformedHeader("Tensor %s has invalid shape %r" % (name, shape))

    offsets = meta["data_offsets"]
    if (not isinstance(offsets, list) or len(offsets) != 2 or
            not all(_is_int(o) and o >= 0 for o in offsets) or
            offsets[0] > offsets[1]):
        raise MalformedHeader("Tensor %s has invalid data_offsets %r" % (name, offsets))
    begin, end = offsets
    if end > data_length:
        raise TruncatedData(
            "Tensor %s ends at %d but only %d data bytes are present" %
            (name, end, data_length))

    expected = int(np.prod(shape, dtype=np.int64)) * known_dtypes[dtype]["width"]
    if end - begin != expected:
        raise MalformedHeader(
            "Tensor %s declares %d bytes, shape and dtype require %d" %
            (name, end - begin, expected))
    return dtype, shape, begin, end


def _check_overlaps(ranges):
    previous_end = 0
    previous_name = None
    for begin, end, name in sorted(ranges):
        if begin == end:
            continue
        if begin < previous_end:
            raise OverlappingRanges(
                "Tensors %s and %s share bytes" % (previous_name, name))
        previous_end, previous_name = end, name


def parse_container(buf):
    """ Parse a complete file image into a :class:`TensorStore`

        :param bytes buf: The whole file
        :rtype: TensorStore

        Byte layout: an unsigned 64-bit little-endian header length
        ``H``, ``H`` bytes of UTF-8 JSON, then the raw tensor data.
        The ``data_offsets`` of each tensor are relative to the end of
        the header.
    """
    buf = memoryview(bytes(buf))
    if len(buf) < prefix_size:
        raise MalformedHeader("File too small for a header length prefix")
    header_size = struct.unpack_from("<Q", buf, 0)[0]
    header_end = prefix_size + header_size
    if header_end > len(buf):
        raise MalformedHeader(
            "Header length %d exceeds the %d available bytes" %
            (header_size, len(buf) - prefix_size))

    try:
        header = json.loads(bytes(buf[prefix_size:header_end]).decode("utf-8"),
                            object_pairs_hook=_unique_keys)
    except (UnicodeDecodeError, ValueError) as e:
        raise MalformedHeader("Invalid header text: %s" % e)
    if not isinstance(header, dict):
        raise MalformedHeader("Header is not a JSON object")

    metadata = header.pop(metadata_key, {})
    if (not isinstance(metadata, dict) or
            not all(isinstance(k, str) and isinstance(v, str)
                    for k, v in metadata.items())):
        raise MalformedHeader("%s must map strings to strings" % metadata_key)

    data = buf[header_end:]
    parsed = {}
    for name, meta in header.items():
        parsed[name] = _parse_entry(name, meta, len(data))
    _check_overlaps([(begin, end, name) for name, (_, _, begin, end) in parsed.items()])

    tensors = {}
    for name, (dtype, shape, begin, end) in parsed.items():
        values = np.frombuffer(data[begin:end], dtype=known_dtypes[dtype]["numpy"])
        tensors[name] = TensorEntry(dtype, shape, values, name=name)
    log.debug("Parsed %d tensors from %d bytes" % (len(tensors), len(buf)))
    return TensorStore(tensors, metadata)


def write_container(store):
    """ Serialize a :class:`TensorStore`. Tensors are laid out in
        sorted name order, so the output is deterministic for a given
        store.

        :param TensorStore store: Store to serialize
        :rtype: bytes
    """
    header = OrderedDict()
    if store.metadata:
        header[metadata_key] = OrderedDict(sorted(store.metadata.items()))
    chunks = []
    offset = 0
    for name in sorted(store.keys()):
        entry = store[name]
        if entry.dtype not in known_dtypes:
            raise UnsupportedDtype("Tensor %s has unsupported dtype %r" % (name, entry.dtype))
        raw = entry.tobytes()
        header[name] = OrderedDict([
            ("dtype", entry.dtype),
            ("shape", list(entry.shape)),
            ("data_offsets", [offset, offset + len(raw)]),
        ])
        chunks.append(raw)
        offset += len(raw)

    text = json.dumps(header, separators=(",", ":")).encode("utf-8")
    text += b" " * (-len(text) % header_alignment)
    return struct.pack("<Q", len(text)) + text + b"".join(chunks)


def load_file(path):
    """ Read and parse a weight file from disk. The sha256 of the raw
        file is kept in ``store.digest``.

        :param str path: Path of the weight file
    """
    with open(path, "rb") as fp:
        raw = fp.read()
    store = parse_container(raw)
    store.digest = hashlib.sha256(raw).hexdigest()
    return store


def dump_file(store, path):
    """ Write a store to ``path`` (temp file, then rename)
    """
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".swa-")
    try:
        with os.fdopen(fd, "wb") as fp:
            fp.write(write_container(store))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise
