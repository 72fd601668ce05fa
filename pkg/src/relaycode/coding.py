"""Packets, random linear encoding and rank-tracking decoding over GF(2^m)."""

from __future__ import annotations

import random
from dataclasses import dataclass, field as dataclass_field

from .errors import DimensionMismatch, InsufficientRank
from .field import DEFAULT_FIELD, FieldSpec


@dataclass(frozen=True)
class Packet:
    """A coded packet: its coding vector over the M originals plus the payload."""

    coding_vector: tuple
    payload: tuple

    @property
    def m(self) -> int:
        return len(self.coding_vector)

    def unit_index(self) -> int | None:
        """Index i if the coding vector is exactly e_i, else None."""
        index = None
        for pos, c in enumerate(self.coding_vector):
            if c == 0:
                continue
            if c != 1 or index is not None:
                return None
            index = pos
        return index

    @property
    def is_uncoded(self) -> bool:
        return self.unit_index() is not None

    @property
    def is_null(self) -> bool:
        return not any(self.coding_vector)


def encode(originals, coefficients, field: FieldSpec = DEFAULT_FIELD) -> Packet:
    """Linear combination ``sum_i c_i * p_i`` of the original payloads."""
    if len(originals) != len(coefficients):
        raise DimensionMismatch(
            f"{len(coefficients)} coefficients for {len(originals)} original packets"
        )
    if not originals:
        raise DimensionMismatch("at least one original packet is required")
    length = len(originals[0])
    payload = [0] * length
    for c, p in zip(coefficients, originals):
        if len(p) != length:
            raise DimensionMismatch("original payloads differ in length")
        if c:
            payload = field.axpy(c, p, payload)
    return Packet(tuple(coefficients), tuple(payload))


def uncoded_packet(originals, index: int) -> Packet:
    m = len(originals)
    vector = [0] * m
    vector[index] = 1
    return Packet(tuple(vector), tuple(originals[index]))


def random_coefficients(m: int, rng: random.Random, field: FieldSpec = DEFAULT_FIELD) -> list:
    """Uniform nonzero vector in GF(q)^m (the all-zero draw is rejected)."""
    bits = field.m
    while True:
        vector = [rng.getrandbits(bits) for _ in range(m)]
        if any(vector):
            return vector


def decoding_cost(m: int, u: int) -> int:
    """Operation-count proxy (M-U)^3 + U(M-U) for decoding with U uncoded packets."""
    if not 0 <= u <= m:
        raise ValueError(f"uncoded count {u} outside [0, {m}]")
    coded = m - u
    return coded**3 + u * coded


@dataclass
class DecoderState:
    """Online Gaussian elimination keeping the received rows in reduced echelon form.

    Rows are stored as coding vector and payload concatenated, keyed by their
    pivot column; every stored row has a 1 at its pivot and zeros at all
    other pivot columns.
    """

    m: int
    payload_length: int = 1
    field: FieldSpec = DEFAULT_FIELD
    rows: dict = dataclass_field(default_factory=dict)
    uncoded_indices: set = dataclass_field(default_factory=set)

    @property
    def rank(self) -> int:
        return len(self.rows)

    @property
    def is_complete(self) -> bool:
        return len(self.rows) == self.m

    def _check(self, pkt: Packet):
        if len(pkt.coding_vector) != self.m or len(pkt.payload) != self.payload_length:
            raise DimensionMismatch(
                f"packet has dimensions ({len(pkt.coding_vector)}, {len(pkt.payload)}), "
                f"decoder expects ({self.m}, {self.payload_length})"
            )

    def _reduce(self, row):
        axpy = self.field.axpy
        for col, basis_row in self.rows.items():
            c = row[col]
            if c:
                row = axpy(c, basis_row, row)
        return row

    def contains(self, coding_vector) -> bool:
        """True if the vector lies in the span of the rows received so far."""
        if len(coding_vector) != self.m:
            raise DimensionMismatch(f"vector of length {len(coding_vector)}, expected {self.m}")
        reduced = self._reduce(list(coding_vector) + [0] * self.payload_length)
        return not any(reduced[: self.m])

    def receive(self, pkt: Packet) -> bool:
        """Fold ``pkt`` into the basis; returns True if it was innovative."""
        self._check(pkt)
        index = pkt.unit_index()
        if index is not None:
            self.uncoded_indices.add(index)
        if len(self.rows) == self.m:
            return False
        row = self._reduce(list(pkt.coding_vector) + list(pkt.payload))
        pivot = next((col for col in range(self.m) if row[col]), None)
        if pivot is None:
            return False
        field = self.field
        row = field.scale(field.inv(row[pivot]), row)
        for col, basis_row in self.rows.items():
            c = basis_row[pivot]
            if c:
                self.rows[col] = field.axpy(c, row, basis_row)
        self.rows[pivot] = row
        return True

    def basis(self) -> list:
        """Stored rows as packets, ordered by pivot column."""
        return [
            Packet(tuple(row[: self.m]), tuple(row[self.m :]))
            for _, row in sorted(self.rows.items())
        ]

    def recombine(self, rng: random.Random) -> Packet | None:
        """Uniformly random nonzero element of the received span; None if empty."""
        if not self.rows:
            return None
        rows = list(self.rows.values())
        coefficients = random_coefficients(len(rows), rng, self.field)
        out = [0] * (self.m + self.payload_length)
        axpy = self.field.axpy
        for c, row in zip(coefficients, rows):
            if c:
                out = axpy(c, row, out)
        return Packet(tuple(out[: self.m]), tuple(out[self.m :]))

    def decode(self) -> list:
        """The M original payloads, in index order."""
        if len(self.rows) < self.m:
            raise InsufficientRank(f"rank {len(self.rows)} < {self.m}")
        # Full rank in reduced echelon form is the identity on the coding part.
        return [tuple(self.rows[i][self.m :]) for i in range(self.m)]


def receive(state: DecoderState, pkt: Packet):
    """Functional form of :meth:`DecoderState.receive`; returns (state, innovative)."""
    innovative = state.receive(pkt)
    return state, innovative


def decode(state: DecoderState) -> list:
    return state.decode()
