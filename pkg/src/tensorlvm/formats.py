"""File formats: DTEN tensors, factors JSON, text corpora and binary PPM images."""

import json
import struct

import numpy as np

from .errors import ValidationError
from .tensor import MAX_ORDER, KruskalForm

MAGIC = b"DTEN"
VERSION = 1


def dten_bytes(T):
    T = np.ascontiguousarray(T, dtype="<f8")
    if not 1 <= T.ndim <= MAX_ORDER:
        raise ValidationError(f"DTEN stores tensors of order 1..{MAX_ORDER}")
    header = MAGIC + struct.pack("<HB", VERSION, T.ndim) + struct.pack(f"<{T.ndim}Q", *T.shape)
    return header + T.tobytes(order="C")


def write_dten(path, T):
    with open(path, "wb") as fh:
        fh.write(dten_bytes(T))


def parse_dten(buf):
    if len(buf) < 7 or buf[:4] != MAGIC:
        raise ValidationError("not a DTEN file (bad magic)")
    version, order = struct.unpack_from("<HB", buf, 4)
    if version != VERSION:
        raise ValidationError(f"unsupported DTEN version {version}")
    if not 1 <= order <= MAX_ORDER:
        raise ValidationError(f"DTEN order {order} out of range")
    offset = 7 + 8 * order
    if len(buf) < offset:
        raise ValidationError("truncated DTEN header")
    dims = struct.unpack_from(f"<{order}Q", buf, 7)
    if 0 in dims:
        raise ValidationError("DTEN dimensions must be positive")
    count = int(np.prod(dims, dtype=object))
    if len(buf) - offset != 8 * count:
        raise ValidationError(f"DTEN payload holds {(len(buf) - offset) / 8:g} values, expected {count}")
    data = np.frombuffer(buf, dtype="<f8", count=count, offset=offset)
    return data.astype(np.float64).reshape(dims)


def read_dten(path):
    with open(path, "rb") as fh:
        return parse_dten(fh.read())


def fold_signs(K):
    """Make every weight nonnegative by negating the matching first-mode column."""
    signs = np.where(K.weights < 0, -1.0, 1.0)
    first = K.factors[0] * signs
    return KruskalForm(K.weights * signs, (first,) + tuple(K.factors[1:]))


def factors_json(K, report=None):
    """Serialize a Kruskal form; each mode is a list of columns."""
    K = fold_signs(K)
    doc = {
        "rank": int(K.rank),
        "weights": [float(x) for x in K.weights],
        "factors": [[[float(x) for x in col] for col in F.T] for F in K.factors],
        "report": report if report is not None else {},
    }
    return json.dumps(doc, indent=1) + "\n"


def write_factors(path, K, report=None):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(factors_json(K, report))


def parse_factors(text):
    try:
        doc = json.loads(text)
        rank = int(doc["rank"])
        weights = np.array(doc["weights"], dtype=np.float64)
        factors = tuple(np.array(mode, dtype=np.float64).reshape(rank, -1).T for mode in doc["factors"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed factors file: {exc}") from exc
    if weights.size != rank:
        raise ValidationError("factors file: weight count differs from rank")
    return KruskalForm(weights, factors), doc.get("report", {})


def read_factors(path):
    with open(path, encoding="utf-8") as fh:
        return parse_factors(fh.read())


def read_corpus(path):
    """One document per line, whitespace-separated 0-based word indices."""
    docs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                doc = [int(tok) for tok in line.split()]
            except ValueError as exc:
                raise ValidationError(f"line {lineno}: word indices must be integers") from exc
            if any(w < 0 for w in doc):
                raise ValidationError(f"line {lineno}: negative word index")
            docs.append(doc)
    if not docs:
        raise ValidationError("corpus is empty")
    return docs


def write_corpus(path, docs):
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(" ".join(str(int(w)) for w in doc) + "\n")


def _ppm_tokens(buf, count):
    tokens, pos = [], 2
    while len(tokens) < count:
        while pos < len(buf) and buf[pos:pos + 1].isspace():
            pos += 1
        if buf[pos:pos + 1] == b"#":
            while pos < len(buf) and buf[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(buf) and not buf[pos:pos + 1].isspace() and buf[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise ValidationError("truncated PPM header")
        tokens.append(buf[start:pos])
    return tokens, pos


def parse_ppm(buf):
    """Binary P6 with maxval <= 255; returns an ``H × W × 3`` uint8 array."""
    if buf[:2] != b"P6":
        raise ValidationError("not a binary PPM (P6) file")
    tokens, pos = _ppm_tokens(buf, 3)
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError as exc:
        raise ValidationError("malformed PPM header") from exc
    if width <= 0 or height <= 0 or not 0 < maxval <= 255:
        raise ValidationError("PPM must have positive size and an 8-bit maxval")
    if pos >= len(buf) or not buf[pos:pos + 1].isspace():
        raise ValidationError("malformed PPM header")
    pixels = buf[pos + 1:]
    need = width * height * 3
    if len(pixels) != need:
        raise ValidationError(f"PPM payload has {len(pixels)} bytes, expected {need}")
    return np.frombuffer(pixels, dtype=np.uint8).reshape(height, width, 3).copy()


def read_ppm(path):
    with open(path, "rb") as fh:
        return parse_ppm(fh.read())


def ppm_bytes(image):
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3 or image.dtype != np.uint8:
        raise ValidationError("image must be an H x W x 3 uint8 array")
    h, w, _ = image.shape
    return f"P6\n{w} {h}\n255\n".encode("ascii") + np.ascontiguousarray(image).tobytes()


def write_ppm(path, image):
    with open(path, "wb") as fh:
        fh.write(ppm_bytes(image))
