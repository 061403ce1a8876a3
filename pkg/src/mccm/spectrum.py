"""Exact Fourier coefficients of piecewise-constant cascade fields.

For a depth-n field with ``N = b^n`` cells and masses ``m_k`` the density is
``N m_k`` on ``[k/N, (k+1)/N)``, so

    mu^(s) = K_N(s) * sum_k m_k e^{-2 pi i s k / N},
    K_N(s) = (1 - e^{-2 pi i s / N}) / (2 pi i s / N),   K_N(0) = 1.

The sum is the length-N DFT at bin ``s mod N``.  For a general base measure
the same formula gives the spectrum of the level-n piecewise-constant
approximation ``Q_n nu``.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .cascade import HEADER, CascadeField
from .errors import BadInterval
from .weights import ModelSpec, model_from_dict

SPECTRUM_MAGIC = b"MCCS"


@dataclass(frozen=True)
class Spectrum:
    spec: ModelSpec
    depth: int
    seed: int
    kmax: int
    coeffs: np.ndarray

    @property
    def abs2(self) -> np.ndarray:
        return np.abs(self.coeffs) ** 2


def kernel(s, n_cells: int) -> np.ndarray:
    """``K_N(s)`` with exact zeros at nonzero multiples of ``N``."""
    s = np.atleast_1d(np.asarray(s, dtype=np.int64))
    r = s % n_cells
    phase = 2.0 * np.pi * r / n_cells
    out = np.ones(s.shape, dtype=complex)
    nz = s != 0
    num = 1.0 - (np.cos(phase[nz]) - 1j * np.sin(phase[nz]))
    out[nz] = num / (2j * np.pi * s[nz] / n_cells)
    out[nz & (r == 0)] = 0.0
    return out


def fourier_all(field: CascadeField, kmax: int | None = None, allow_alias: bool = False) -> Spectrum:
    """Coefficients ``mu^(s)`` for ``s = 0..kmax`` (default ``kmax = b^depth``).

    ``kmax > b^depth`` repeats DFT bins and needs ``allow_alias=True``.
    """
    n_cells = field.b ** field.depth
    if kmax is None:
        kmax = n_cells
    if kmax < 0:
        raise ValueError("kmax must be non-negative")
    if kmax > n_cells and not allow_alias:
        raise ValueError(f"kmax={kmax} exceeds b^depth={n_cells}; pass allow_alias=True")
    dft = np.fft.fft(field.masses)
    s = np.arange(kmax + 1)
    coeffs = kernel(s, n_cells) * dft[s % n_cells]
    coeffs[0] = np.sum(field.masses)
    return Spectrum(field.spec, field.depth, field.seed, int(kmax), coeffs)


def fourier_at(field: CascadeField, s: int) -> complex:
    """Direct O(b^n) evaluation, independent of the FFT."""
    n_cells = field.b ** field.depth
    s = int(s)
    if s == 0:
        return complex(np.sum(field.masses))
    k = np.arange(n_cells, dtype=np.int64)
    ang = 2.0 * np.pi * ((s % n_cells) * k % n_cells) / n_cells
    raw = np.dot(field.masses, np.cos(ang)) - 1j * np.dot(field.masses, np.sin(ang))
    return complex(kernel([s], n_cells)[0] * raw)


def badic_coeff(field: CascadeField, m: int) -> complex:
    """``mu_n^(b^m)``: zero when ``m >= depth``."""
    if m < 0:
        raise ValueError("m must be non-negative")
    b, n = field.b, field.depth
    if m >= n:
        return 0j
    L = b ** (n - m)
    folded = field.masses.reshape(b ** m, L).sum(axis=0)
    ang = 2.0 * np.pi * np.arange(L) / L
    raw = np.dot(folded, np.cos(ang)) - 1j * np.dot(folded, np.sin(ang))
    return complex(kernel([b ** m], b ** n)[0] * raw)


def restricted_coeffs(field: CascadeField, interval, kmax: int) -> np.ndarray:
    """``int_{[a, c]} e^{-2 pi i s t} d mu_n(t)`` for ``s = 0..kmax``."""
    a, c = (float(v) for v in interval)
    if not (0.0 <= a < c <= 1.0):
        raise BadInterval(f"need 0 <= a < c <= 1, got [{a}, {c}]")
    n_cells = field.b ** field.depth
    fa, fc = Fraction(a) * n_cells, Fraction(c) * n_cells
    k_lo, k_hi = math.ceil(fa), math.floor(fc)
    s = np.arange(kmax + 1)
    inner = np.zeros(n_cells)
    if k_hi > k_lo:
        inner[k_lo:k_hi] = field.masses[k_lo:k_hi]
    out = kernel(s, n_cells) * np.fft.fft(inner)[s % n_cells]
    out[0] = np.sum(inner)
    partial = []
    if fa != k_lo:
        partial.append((math.floor(fa), a, min(c, (math.floor(fa) + 1) / n_cells)))
    if fc != k_hi and k_hi < n_cells and (not partial or k_hi != partial[0][0]):
        partial.append((k_hi, max(a, k_hi / n_cells), c))
    sf = s.astype(float)
    for k, t0, t1 in partial:
        dens = field.masses[k] * n_cells
        part = np.empty(kmax + 1, dtype=complex)
        part[0] = dens * (t1 - t0)
        w = 2j * np.pi * sf[1:]
        part[1:] = dens * (np.exp(-w * t0) - np.exp(-w * t1)) / w
        out = out + part
    return out


def _meta(spectrum: Spectrum) -> dict:
    return {"b": spectrum.spec.b, "depth": spectrum.depth, "seed": spectrum.seed,
            "kmax": spectrum.kmax, "model": spectrum.spec.weight.to_dict()}


def write_spectrum_csv(path, spectrum: Spectrum) -> None:
    with open(path, "w") as fh:
        fh.write("# " + json.dumps(_meta(spectrum), sort_keys=True) + "\n")
        fh.write("s,re,im,abs2\n")
        for s, z in enumerate(spectrum.coeffs):
            fh.write(f"{s},{z.real:.17g},{z.imag:.17g},{abs(z) ** 2:.17g}\n")


def read_spectrum_csv(path) -> Spectrum:
    with open(path) as fh:
        first = fh.readline()
        if not first.startswith("# "):
            raise ValueError(f"{path}: missing metadata line")
        meta = json.loads(first[2:])
        if fh.readline().strip() != "s,re,im,abs2":
            raise ValueError(f"{path}: unexpected header")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    coeffs = data[:, 1] + 1j * data[:, 2]
    spec = ModelSpec(model_from_dict(meta["model"]), int(meta["b"]))
    return Spectrum(spec, int(meta["depth"]), int(meta["seed"]), int(meta["kmax"]), coeffs)


def write_spectrum_bin(path, spectrum: Spectrum) -> None:
    """Header, a length-prefixed JSON metadata block, then interleaved ``re, im`` doubles."""
    meta = json.dumps(_meta(spectrum), sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(SPECTRUM_MAGIC, spectrum.spec.b, spectrum.depth,
                             spectrum.seed & ((1 << 64) - 1), b"spectrum".ljust(16, b"\0")))
        fh.write(struct.pack("<I", len(meta)))
        fh.write(meta)
        pairs = np.empty(2 * len(spectrum.coeffs), dtype="<f8")
        pairs[0::2] = spectrum.coeffs.real
        pairs[1::2] = spectrum.coeffs.imag
        fh.write(pairs.tobytes())


def read_spectrum_bin(path) -> Spectrum:
    with open(path, "rb") as fh:
        raw = fh.read()
    magic, b, depth, seed, _ = HEADER.unpack_from(raw)
    if magic != SPECTRUM_MAGIC:
        raise ValueError(f"{path}: not a spectrum dump")
    (n_meta,) = struct.unpack_from("<I", raw, HEADER.size)
    start = HEADER.size + 4
    meta = json.loads(raw[start:start + n_meta])
    pairs = np.frombuffer(raw, dtype="<f8", offset=start + n_meta)
    spec = ModelSpec(model_from_dict(meta["model"]), b)
    return Spectrum(spec, depth, int(meta["seed"]), int(meta["kmax"]), pairs[0::2] + 1j * pairs[1::2])


def read_spectrum(path) -> Spectrum:
    """Dispatch on the file's first bytes."""
    with open(path, "rb") as fh:
        head = fh.read(4)
    return read_spectrum_bin(path) if head == SPECTRUM_MAGIC else read_spectrum_csv(path)
