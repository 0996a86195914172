"""Layered arithmetic circuits and the GKR protocol.

V_0 is the output layer and V_d the input layer; gate i of layer j computes
V_j[i] from two wires of V_{j+1}. Positions beyond a layer's gate count read as
zero, so a relay (identity) gate is an add whose right input is such a slot.

Each layer is reduced with two sumchecks (first over the left wire, then over
the right), using bookkeeping tables built from the sparse gate list so the
prover is linear in the gate count. The two resulting claims on V_{j+1} are
merged with a random linear combination.
"""

from __future__ import annotations

import hashlib
import json
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np

from . import fvec
from .field import ExtElement, P
from .fvec import EVec
from .multilinear import MultilinearPoly, eq_evaluate, eq_table, index_bits, mle_evaluate, next_pow2
from .serialize import Reader, Writer
from .sumcheck import SumcheckClaim, SumcheckProof, Term, sumcheck_prove, sumcheck_verify
from .transcript import Transcript

ADD, MUL = 0, 1


class CircuitError(ValueError):
    pass


@dataclass
class Layer:
    kinds: np.ndarray  # uint8, ADD or MUL
    left: np.ndarray  # int64 indices into the next-deeper layer
    right: np.ndarray
    width: int  # power of two, >= number of gates

    def __post_init__(self):
        self.kinds = np.asarray(self.kinds, dtype=np.uint8)
        self.left = np.asarray(self.left, dtype=np.int64)
        self.right = np.asarray(self.right, dtype=np.int64)
        if len(self.kinds) > self.width or self.width & (self.width - 1):
            raise CircuitError("layer width must be a power of two covering its gates")

    @property
    def num_vars(self) -> int:
        return self.width.bit_length() - 1


@dataclass
class Segment:
    name: str
    offset: int
    size: int
    public: np.ndarray | None = None  # None for committed (prover-supplied) segments

    @property
    def committed(self) -> bool:
        return self.public is None


@dataclass
class LayeredCircuit:
    layers: list[Layer]  # layers[0] produces the output layer
    input_width: int
    segments: list[Segment] = field(default_factory=list)
    expected_output: np.ndarray | None = None

    @property
    def depth(self) -> int:
        return len(self.layers)

    def width(self, j: int) -> int:
        return self.input_width if j == self.depth else self.layers[j].width

    def validate(self) -> None:
        for j, layer in enumerate(self.layers):
            below = self.width(j + 1)
            if len(layer.left) and (layer.left.max() >= below or layer.right.max() >= below):
                raise CircuitError(f"layer {j} references a wire outside layer {j + 1}")
            if len(layer.left) and (layer.left.min() < 0 or layer.right.min() < 0):
                raise CircuitError(f"layer {j} has a negative wire index")

    @property
    def gate_count(self) -> int:
        return sum(len(layer.kinds) for layer in self.layers)

    def committed_segments(self) -> list[Segment]:
        return [s for s in self.segments if s.committed]

    def to_json(self) -> str:
        doc = {
            "layers": [
                {
                    "width": layer.width,
                    "gates": [[int(k), int(a), int(b)] for k, a, b in zip(layer.kinds, layer.left, layer.right)],
                }
                for layer in self.layers
            ],
            "input": {
                "width": self.input_width,
                "segments": [
                    {
                        "name": s.name,
                        "offset": s.offset,
                        "size": s.size,
                        "public": None if s.public is None else [int(v) for v in s.public],
                    }
                    for s in self.segments
                ],
            },
            "expected_output": None
            if self.expected_output is None
            else [int(v) for v in self.expected_output],
        }
        return json.dumps(doc)

    @staticmethod
    def from_json(text: str) -> "LayeredCircuit":
        doc = json.loads(text)
        layers = []
        for spec in doc["layers"]:
            g = np.array(spec["gates"], dtype=np.int64).reshape(-1, 3)
            layers.append(Layer(g[:, 0], g[:, 1], g[:, 2], spec["width"]))
        segs = [
            Segment(
                s["name"],
                s["offset"],
                s["size"],
                None if s["public"] is None else np.array(s["public"], dtype=np.uint64),
            )
            for s in doc["input"]["segments"]
        ]
        exp = doc.get("expected_output")
        c = LayeredCircuit(
            layers,
            doc["input"]["width"],
            segs,
            None if exp is None else np.array(exp, dtype=np.uint64),
        )
        c.validate()
        return c


def assemble_input(circuit: LayeredCircuit, values: dict[str, np.ndarray] | None = None) -> np.ndarray:
    """Lay committed and public segments out into the input layer."""
    values = values or {}
    v = np.zeros(circuit.input_width, dtype=np.uint64)
    for s in circuit.segments:
        data = s.public if s.public is not None else values.get(s.name)
        if data is None:
            raise CircuitError(f"missing input segment {s.name!r}")
        data = fvec.asvec(data)
        if len(data) > s.size:
            raise CircuitError(f"segment {s.name!r} holds {s.size} values, got {len(data)}")
        v[s.offset : s.offset + len(data)] = data
    return v


def circuit_evaluate(circuit: LayeredCircuit, inputs) -> list[np.ndarray]:
    """All layer values, V_0 (outputs) first and V_d (inputs) last."""
    if isinstance(inputs, dict):
        inputs = assemble_input(circuit, inputs)
    cur = fvec.asvec(inputs)
    if len(cur) != circuit.input_width:
        raise CircuitError(f"input has {len(cur)} values, circuit expects {circuit.input_width}")
    values = [cur]
    for layer in reversed(circuit.layers):
        if len(layer.left) and (layer.left.max() >= len(cur) or layer.right.max() >= len(cur)):
            raise CircuitError("gate index out of range")
        lv, rv = cur[layer.left], cur[layer.right]
        out = np.zeros(layer.width, dtype=np.uint64)
        is_mul = layer.kinds == MUL
        g = len(layer.kinds)
        res = np.empty(g, dtype=np.uint64)
        if is_mul.any():
            res[is_mul] = fvec.mul(lv[is_mul], rv[is_mul])
        if (~is_mul).any():
            res[~is_mul] = fvec.add(lv[~is_mul], rv[~is_mul])
        out[:g] = res
        cur = out
        values.append(cur)
    values.reverse()
    return values


# -- proof objects -------------------------------------------------------------


@dataclass
class GKRLayerProof:
    left: SumcheckProof  # final_evals = [V(r_y)]
    right: SumcheckProof  # final_evals = [V(r_z)]


@dataclass
class GKRProof:
    layers: list[GKRLayerProof]
    # committed-segment evaluations at the two final input points
    input_evals: list[list[ExtElement]] = field(default_factory=list)
    input_points: list[list[ExtElement]] = field(default_factory=list, compare=False)


@dataclass
class GKRResult:
    ok: bool
    reason: str = ""
    input_claims: list[tuple[list[ExtElement], ExtElement]] = field(default_factory=list)
    segment_claims: list[tuple[str, list[ExtElement], ExtElement]] = field(default_factory=list)

    def __bool__(self):
        return self.ok


def _ext_gather(v: EVec, idx: np.ndarray) -> EVec:
    return EVec(v.c0[idx], None if v.c1 is None else v.c1[idx])


def _ext_scatter(idx: np.ndarray, vals: EVec, size: int) -> EVec:
    c0 = fvec.scatter_total(idx, vals.c0, size)
    if vals.c1 is None:
        return EVec(c0)
    return EVec(c0, fvec.scatter_total(idx, vals.c1, size))


def _weights(width: int, points: Sequence[list[ExtElement]], coeffs: Sequence[ExtElement]) -> EVec:
    acc = None
    for pt, c in zip(points, coeffs):
        t = eq_table(pt) if c == 1 else eq_table(pt).scale(c)
        acc = t if acc is None else acc + t
    assert acc is not None and len(acc) == width
    return acc


def wiring_values(layer: Layer, wt: EVec, ry, rz) -> tuple[ExtElement, ExtElement]:
    """Sparse evaluation of the combined add and mult predicates at (g, r_y, r_z)."""
    g = len(layer.kinds)
    if g == 0:
        return ExtElement(0), ExtElement(0)
    ey, ez = eq_table(ry), eq_table(rz)
    vals = wt[:g] * _ext_gather(ey, layer.left) * _ext_gather(ez, layer.right)
    is_mul = layer.kinds == MUL
    mul_val = _ext_gather(vals, np.nonzero(is_mul)[0]).sum()
    add_val = _ext_gather(vals, np.nonzero(~is_mul)[0]).sum()
    return add_val, mul_val


def _segment_layout(circuit: LayeredCircuit, point: Sequence[ExtElement]):
    k = len(point)
    for s in circuit.segments:
        low = s.size.bit_length() - 1
        high = k - low
        prefix = eq_evaluate(point[:high], index_bits(s.offset >> low, high)) if high else ExtElement(1)
        yield s, prefix, list(point[high:])


def segment_evaluations(circuit: LayeredCircuit, values: dict[str, np.ndarray], point) -> list[ExtElement]:
    out = []
    for s, _prefix, low in _segment_layout(circuit, point):
        if s.committed:
            data = np.zeros(s.size, dtype=np.uint64)
            v = fvec.asvec(values[s.name])
            data[: len(v)] = v
            out.append(mle_evaluate(MultilinearPoly(EVec(data)), low))
    return out


def check_input_claim(
    circuit: LayeredCircuit, point, claimed: ExtElement, committed_vals: Sequence[ExtElement]
) -> tuple[bool, list[tuple[str, list[ExtElement], ExtElement]]]:
    """Recombine segment values into V_d(point); public segments are evaluated here."""
    acc = ExtElement(0)
    it = iter(committed_vals)
    claims = []
    for s, prefix, low in _segment_layout(circuit, point):
        if s.committed:
            v = next(it)
            claims.append((s.name, low, v))
        else:
            data = np.zeros(s.size, dtype=np.uint64)
            data[: len(s.public)] = s.public
            v = mle_evaluate(MultilinearPoly(EVec(data)), low)
        acc = acc + prefix * v
    return acc == claimed, claims


def _circuit_digest(circuit: LayeredCircuit) -> bytes:
    h = hashlib.sha256()
    h.update(np.array([len(circuit.layers), circuit.input_width], dtype="<u8").tobytes())
    for layer in circuit.layers:
        h.update(np.array([layer.width, len(layer.kinds)], dtype="<u8").tobytes())
        h.update(layer.kinds.tobytes() + layer.left.astype("<i8").tobytes() + layer.right.astype("<i8").tobytes())
    for s in circuit.segments:
        h.update(s.name.encode() + np.array([s.offset, s.size], dtype="<u8").tobytes())
        if s.public is not None:
            h.update(np.asarray(s.public, dtype="<u8").tobytes())
    return h.digest()


def gkr_prove(
    circuit: LayeredCircuit,
    inputs,
    transcript: Transcript,
    segment_values: dict[str, np.ndarray] | None = None,
) -> GKRProof:
    if isinstance(inputs, dict):
        segment_values = inputs
        inputs = assemble_input(circuit, inputs)
    values = circuit_evaluate(circuit, inputs)
    transcript.absorb(b"gkr-circuit", _circuit_digest(circuit))
    r0 = transcript.challenge_vec(circuit.layers[0].num_vars if circuit.layers else 0, b"gkr-r0")
    points, coeffs = [r0], [ExtElement(1)]
    layer_proofs = []
    for j, layer in enumerate(circuit.layers):
        below = MultilinearPoly(EVec(values[j + 1]))
        width = circuit.width(j + 1)
        g = len(layer.kinds)
        wt = _weights(layer.width, points, coeffs)[:g]
        vr = EVec(values[j + 1][layer.right])
        is_add = np.nonzero(layer.kinds == ADD)[0]
        is_mul = np.nonzero(layer.kinds == MUL)[0]
        wt_add, wt_mul = _ext_gather(wt, is_add), _ext_gather(wt, is_mul)
        h1 = _ext_scatter(layer.left[is_add], wt_add, width) + _ext_scatter(
            layer.left[is_mul], wt_mul * _ext_gather(vr, is_mul), width
        )
        h2 = _ext_scatter(layer.left[is_add], wt_add * _ext_gather(vr, is_add), width)
        h1p, h2p = MultilinearPoly(h1), MultilinearPoly(h2)
        claim1 = below.evals.dot(h1) + h2.sum()
        left = sumcheck_prove(
            SumcheckClaim(claim1, terms=[Term(1, [below, h1p]), Term(1, [h2p])], reveal=[below]),
            transcript,
        )
        ry, vy = left.point, left.final_evals[0]
        ey = eq_table(ry)
        ey_add = wt_add * _ext_gather(ey, layer.left[is_add])
        ey_mul = wt_mul * _ext_gather(ey, layer.left[is_mul])
        g1 = _ext_scatter(layer.right[is_add], ey_add, width) + _ext_scatter(
            layer.right[is_mul], ey_mul.scale(vy), width
        )
        g2 = _ext_scatter(layer.right[is_add], ey_add.scale(vy), width)
        g1p, g2p = MultilinearPoly(g1), MultilinearPoly(g2)
        claim2 = below.evals.dot(g1) + g2.sum()
        right = sumcheck_prove(
            SumcheckClaim(claim2, terms=[Term(1, [below, g1p]), Term(1, [g2p])], reveal=[below]),
            transcript,
        )
        rz = right.point
        layer_proofs.append(GKRLayerProof(left, right))
        rho = transcript.challenge_ext(b"gkr-merge")
        points, coeffs = [ry, rz], [ExtElement(1), rho]

    proof = GKRProof(layer_proofs)
    if segment_values is not None:
        for pt in points:
            evals = segment_evaluations(circuit, segment_values, pt)
            transcript.absorb_ext(b"gkr-input", evals)
            proof.input_evals.append(evals)
    proof.input_points = points
    return proof


def gkr_verify(
    circuit: LayeredCircuit,
    output: np.ndarray | None,
    proof: GKRProof,
    transcript: Transcript,
    input_oracle: Callable[[list[ExtElement], ExtElement], bool] | None = None,
) -> GKRResult:
    """Reduce the output claim to claims on the input layer.

    With segment evaluations in the proof, public segments are recomputed and
    committed-segment claims are returned for PCS discharge; ``input_oracle``
    may instead check the raw input-layer claims directly.
    """
    if output is None:
        output = circuit.expected_output
    if len(proof.layers) != circuit.depth:
        return GKRResult(False, "wrong number of layers")
    transcript.absorb(b"gkr-circuit", _circuit_digest(circuit))
    k0 = circuit.layers[0].num_vars if circuit.layers else 0
    r0 = transcript.challenge_vec(k0, b"gkr-r0")
    out_vec = np.zeros(circuit.width(0), dtype=np.uint64)
    out_vec[: len(output)] = fvec.asvec(output)
    claim = mle_evaluate(MultilinearPoly(EVec(out_vec)), r0)
    points, coeffs = [r0], [ExtElement(1)]
    claims = []
    for j, (layer, lp) in enumerate(zip(circuit.layers, proof.layers)):
        k = circuit.width(j + 1).bit_length() - 1
        if len(lp.left.final_evals) != 1 or len(lp.right.final_evals) != 1:
            return GKRResult(False, f"layer {j}: malformed")
        res1 = sumcheck_verify(claim, lp.left, 2, k, transcript)
        if not res1:
            return GKRResult(False, f"layer {j} left sumcheck: {res1.reason}")
        res2 = sumcheck_verify(res1.final_value, lp.right, 2, k, transcript)
        if not res2:
            return GKRResult(False, f"layer {j} right sumcheck: {res2.reason}")
        vy, vz = lp.left.final_evals[0], lp.right.final_evals[0]
        wt = _weights(layer.width, points, coeffs)
        add_val, mul_val = wiring_values(layer, wt, res1.point, res2.point)
        if res2.final_value != add_val * (vy + vz) + mul_val * vy * vz:
            return GKRResult(False, f"layer {j}: wiring check failed")
        rho = transcript.challenge_ext(b"gkr-merge")
        points, coeffs = [res1.point, res2.point], [ExtElement(1), rho]
        claims = [(res1.point, vy), (res2.point, vz)]
        claim = vy + rho * vz
    if not circuit.layers:
        claims = [(r0, claim)]

    seg_claims = []
    if proof.input_evals:
        if len(proof.input_evals) != len(claims):
            return GKRResult(False, "missing input evaluations")
        n_committed = len(circuit.committed_segments())
        for (pt, val), evals in zip(claims, proof.input_evals):
            if len(evals) != n_committed:
                return GKRResult(False, "wrong number of input evaluations")
            transcript.absorb_ext(b"gkr-input", evals)
            ok, sc = check_input_claim(circuit, pt, val, evals)
            if not ok:
                return GKRResult(False, "input layer claim mismatch")
            seg_claims.extend(sc)
    if input_oracle is not None:
        for pt, val in claims:
            if not input_oracle(pt, val):
                return GKRResult(False, "input oracle rejected")
    return GKRResult(True, "", claims, seg_claims)


def write_gkr(w: Writer, proof: GKRProof) -> None:
    for lp in proof.layers:
        for sc in (lp.left, lp.right):
            for rnd in sc.rounds:
                w.ext(rnd)
            w.ext(sc.final_evals)
    for evals in proof.input_evals:
        w.ext(evals)


def read_gkr(r: Reader, circuit: LayeredCircuit, with_inputs: bool = True) -> GKRProof:
    layers = []
    for j in range(circuit.depth):
        k = circuit.width(j + 1).bit_length() - 1
        scs = []
        for _ in range(2):
            rounds = [r.ext(3) for _ in range(k)]
            scs.append(SumcheckProof(rounds, r.ext(1)))
        layers.append(GKRLayerProof(*scs))
    proof = GKRProof(layers)
    if with_inputs:
        n = len(circuit.committed_segments())
        proof.input_evals = [r.ext(n) for _ in range(2 if circuit.depth else 1)]
    return proof


# -- vector-level circuit builder ----------------------------------------------


class _Node:
    __slots__ = ("depth", "op", "left", "right", "size", "segment")

    def __init__(self, depth, op, size, left=None, right=None, segment=None):
        self.depth = depth
        self.op = op  # "in", ADD, MUL or "relay"
        self.size = size
        self.left = left
        self.right = right
        self.segment = segment


class Wires:
    """A vector of wires: positions ``idx`` of a builder node."""

    __slots__ = ("node", "idx")

    def __init__(self, node: _Node, idx: np.ndarray):
        self.node = node
        self.idx = idx

    def __len__(self):
        return len(self.idx)

    def __getitem__(self, key) -> "Wires":
        return Wires(self.node, np.atleast_1d(self.idx[key]))

    @property
    def depth(self) -> int:
        return self.node.depth


class CircuitBuilder:
    """Builds layered circuits from elementwise vector operations.

    Operands at different depths are lifted with relay gates, and scalar
    constants live in a public input segment.
    """

    def __init__(self):
        self._inputs: list[tuple[str, int, np.ndarray | None]] = []
        self._input_nodes: dict[str, _Node] = {}
        self._consts: dict[int, int] = {0: 0}
        self._const_node = _Node(0, "in", 0, segment="__const__")
        self._outputs: list[tuple[Wires, np.ndarray]] = []
        self._relays: dict[tuple, _Node] = {}

    # inputs
    def input(self, name: str, size: int) -> Wires:
        return self._add_input(name, size, None)

    def public(self, name: str, values) -> Wires:
        return self._add_input(name, len(values), fvec.asvec(values))

    def _add_input(self, name, size, values) -> Wires:
        if name in self._input_nodes or name == "__const__":
            raise CircuitError(f"duplicate input {name!r}")
        node = _Node(0, "in", size, segment=name)
        self._inputs.append((name, size, values))
        self._input_nodes[name] = node
        return Wires(node, np.arange(size, dtype=np.int64))

    def const(self, value: int, n: int = 1) -> Wires:
        value %= P
        if value not in self._consts:
            self._consts[value] = len(self._consts)
        pos = self._consts[value]
        self._const_node.size = len(self._consts)
        return Wires(self._const_node, np.full(n, pos, dtype=np.int64))

    # arithmetic
    def _lift(self, w: Wires, depth: int) -> Wires:
        if w.depth == depth:
            return w
        if w.depth > depth:
            raise CircuitError("cannot lift a wire downwards")
        key = (id(w.node), depth, w.idx.tobytes())
        node = self._relays.get(key)
        if node is None:
            below = self._lift(w, depth - 1)
            node = _Node(depth, "relay", len(w), left=below)
            self._relays[key] = node
        return Wires(node, np.arange(len(w), dtype=np.int64))

    def _binary(self, op, a: Wires, b: Wires) -> Wires:
        if len(a) != len(b):
            if len(a) == 1:
                a = Wires(a.node, np.repeat(a.idx, len(b)))
            elif len(b) == 1:
                b = Wires(b.node, np.repeat(b.idx, len(a)))
            else:
                raise CircuitError(f"length mismatch {len(a)} vs {len(b)}")
        d = max(a.depth, b.depth) + 1
        a, b = self._lift(a, d - 1), self._lift(b, d - 1)
        node = _Node(d, op, len(a), left=a, right=b)
        return Wires(node, np.arange(len(a), dtype=np.int64))

    def add(self, a: Wires, b: Wires) -> Wires:
        return self._binary(ADD, a, b)

    def mul(self, a: Wires, b: Wires) -> Wires:
        return self._binary(MUL, a, b)

    def scale(self, a: Wires, c: int) -> Wires:
        return self.mul(a, self.const(c))

    def sub(self, a: Wires, b: Wires) -> Wires:
        return self.add(a, self.scale(b, -1))

    def lin(self, *pairs: tuple[int, Wires]) -> Wires:
        """sum_i c_i * w_i, skipping the multiply when c_i is 1."""
        parts = [w if c % P == 1 else self.scale(w, c) for c, w in pairs]
        acc = parts[0]
        for p in parts[1:]:
            acc = self.add(acc, p)
        return acc

    def concat(self, parts: Sequence[Wires]) -> Wires:
        d = max(p.depth for p in parts)
        lifted = [self._lift(p, d) for p in parts]
        if all(p.node is lifted[0].node for p in lifted):
            return Wires(lifted[0].node, np.concatenate([p.idx for p in lifted]))
        # gather through one relay layer so the pieces share a node
        node = _Node(d + 1, "gather", sum(len(p) for p in lifted), left=lifted)
        return Wires(node, np.arange(node.size, dtype=np.int64))

    def sum_groups(self, a: Wires, group: int) -> Wires:
        """Sum consecutive runs of ``group`` wires; group must be a power of two."""
        if group & (group - 1) or len(a) % group:
            raise CircuitError("group size must be a power of two dividing the length")
        while group > 1:
            a = self.add(a[0::2], a[1::2])
            group //= 2
        return a

    def sum(self, a: Wires) -> Wires:
        n = next_pow2(len(a))
        if n != len(a):
            a = self.concat([a, self.const(0, n - len(a))])
        return self.sum_groups(a, n)

    def product_groups(self, a: Wires, group: int) -> Wires:
        while group > 1:
            a = self.mul(a[0::2], a[1::2])
            group //= 2
        return a

    def output(self, a: Wires, expected=None) -> None:
        exp = np.zeros(len(a), dtype=np.uint64) if expected is None else fvec.asvec(expected)
        if len(exp) != len(a):
            raise CircuitError("expected output length mismatch")
        self._outputs.append((a, exp))

    def assert_zero(self, a: Wires) -> None:
        self.output(a)

    # compilation
    def compile(self) -> LayeredCircuit:
        if not self._outputs:
            raise CircuitError("circuit has no outputs")
        top = max(w.depth for w, _ in self._outputs) + 1
        outs = [self._lift(w, top - 1) for w, _ in self._outputs]
        out_node = _Node(top, "gather", sum(len(w) for w in outs), left=outs)
        expected = np.concatenate([e for _, e in self._outputs])

        # collect reachable nodes by depth
        by_depth: dict[int, list[_Node]] = {}
        seen: set[int] = set()
        stack = [out_node]
        while stack:
            n = stack.pop()
            if id(n) in seen:
                continue
            seen.add(id(n))
            by_depth.setdefault(n.depth, []).append(n)
            kids = []
            if n.op == "gather":
                kids = [w.node for w in n.left]
            elif n.op == "relay":
                kids = [n.left.node]
            elif n.op in (ADD, MUL):
                kids = [n.left.node, n.right.node]
            stack.extend(kids)

        # input layer: buddy placement, largest segments first
        segs_src = [(name, size, vals) for name, size, vals in self._inputs if id(self._input_nodes[name]) in seen]
        const_vals = np.zeros(len(self._consts), dtype=np.uint64)
        for v, pos in self._consts.items():
            const_vals[pos] = v
        segs_src.append(("__const__", len(const_vals), const_vals))
        order = sorted(segs_src, key=lambda s: -next_pow2(s[1]))
        offset = 0
        segments: list[Segment] = []
        place: dict[int, int] = {}
        for name, size, vals in order:
            sz = next_pow2(size)
            segments.append(Segment(name, offset, sz, vals))
            node = self._const_node if name == "__const__" else self._input_nodes[name]
            place[id(node)] = offset
            offset += sz
        input_width = next_pow2(offset)
        zero_slot = {0: place[id(self._const_node)] + self._consts[0]}

        layers_from_input: list[Layer] = []
        for d in range(1, top + 1):
            nodes = by_depth.get(d, [])
            kinds, left, right = [], [], []
            pos = 0
            for n in nodes:
                place[id(n)] = pos
                pos += n.size
                if n.op in (ADD, MUL):
                    kinds.append(np.full(n.size, n.op, dtype=np.uint8))
                    left.append(place[id(n.left.node)] + n.left.idx)
                    right.append(place[id(n.right.node)] + n.right.idx)
                elif n.op == "relay":
                    kinds.append(np.zeros(n.size, dtype=np.uint8))
                    left.append(place[id(n.left.node)] + n.left.idx)
                    right.append(np.full(n.size, zero_slot[d - 1], dtype=np.int64))
                else:  # gather
                    for w in n.left:
                        kinds.append(np.zeros(len(w), dtype=np.uint8))
                        left.append(place[id(w.node)] + w.idx)
                        right.append(np.full(len(w), zero_slot[d - 1], dtype=np.int64))
            width = next_pow2(pos + 1)
            zero_slot[d] = pos
            cat = lambda xs, dt: np.concatenate(xs).astype(dt) if xs else np.zeros(0, dtype=dt)  # noqa: E731
            layers_from_input.append(Layer(cat(kinds, np.uint8), cat(left, np.int64), cat(right, np.int64), width))

        # the output layer needs no spare zero slot
        last = layers_from_input[-1]
        last.width = next_pow2(max(1, len(last.kinds)))
        circuit = LayeredCircuit(list(reversed(layers_from_input)), input_width, segments, expected)
        circuit.validate()
        return circuit
