import struct

import numpy as np


def write_nifti1(path, data, spacing_mm, datatype_code):
    """Minimal independent NIfTI-1 writer used to exercise the reader.

    Builds the 348-byte header by hand with struct.pack -- deliberately not
    sharing any code with the package reader.
    """
    codes = {2: np.uint8, 4: np.int16, 16: np.float32}
    bitpix = {2: 8, 4: 16, 16: 32}
    np_dtype = codes[datatype_code]
    data = np.asarray(data, dtype=np_dtype)
    nx, ny, nz = data.shape
    hdr = bytearray(348)
    struct.pack_into("<i", hdr, 0, 348)                      # sizeof_hdr
    struct.pack_into("<8h", hdr, 40, 3, nx, ny, nz, 1, 1, 1, 1)  # dim
    struct.pack_into("<h", hdr, 70, datatype_code)           # datatype
    struct.pack_into("<h", hdr, 72, bitpix[datatype_code])   # bitpix
    struct.pack_into("<8f", hdr, 76, 0.0, spacing_mm[0], spacing_mm[1], spacing_mm[2], 1.0, 0.0, 0.0, 0.0)
    struct.pack_into("<f", hdr, 108, 352.0)                  # vox_offset
    struct.pack_into("<4s", hdr, 344, b"n+1\x00")            # magic
    with open(path, "wb") as fh:
        fh.write(bytes(hdr))
        fh.write(b"\x00\x00\x00\x00")                        # extension flag
        fh.write(data.ravel(order="F").tobytes())
