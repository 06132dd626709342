#: Supported tensor dtypes, mapped to their little-endian numpy type
#: string and the width of one element in bytes
known_dtypes = {
    "F16": {
        "numpy": "<f2",
        "width": 2,
    },
    "F32": {
        "numpy": "<f4",
        "width": 4,
    },
    "F64": {
        "numpy": "<f8",
        "width": 8,
    },
}

#: Highest tensor rank the container accepts
max_rank = 4

#: Reserved header key that carries the free-form string map
metadata_key = "__metadata__"
