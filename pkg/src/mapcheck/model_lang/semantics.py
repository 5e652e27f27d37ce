"""Execution semantics: state layout, successor generation, acceptance and
property relevance.

State layout (little-endian, fixed width for a given model):

* every global in declaration order (``byte`` = 1 byte, ``int`` = 2 bytes signed);
* for every non-property process in declaration order: its location index
  (1 byte, or 2 when it has more than 256 locations) followed by its locals;
* for every buffered channel in declaration order: a 1-byte fill count and
  ``capacity`` 2-byte signed slots (unused slots are zero);
* the property process's location index, if there is a property.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Optional

from ..errors import MapcheckError
from .syntax import TYPE_RANGES, Binary, Model, Num, Ref, Unary

INT32 = 1 << 32
CHANNEL_RANGE = TYPE_RANGES["int"]


class ModelRuntimeError(MapcheckError):
    def __init__(self, message: str, state: Optional[bytes] = None, where: str = ""):
        text = message if not where else f"{where}: {message}"
        if state is not None:
            text += f" (state {state.hex()})"
        super().__init__(text)
        self.state = state
        self.where = where


class _EvalError(Exception):
    pass


def _w(x):
    return (x + (1 << 31)) % INT32 - (1 << 31)


def _div(a, b):
    if b == 0:
        raise _EvalError("division by zero")
    q = abs(a) // abs(b)
    return _w(q if (a >= 0) == (b >= 0) else -q)


def _mod(a, b):
    if b == 0:
        raise _EvalError("modulo by zero")
    return a - _div(a, b) * b


_RUNTIME = {"_w": _w, "_div": _div, "_mod": _mod}


@dataclass(frozen=True)
class Slot:
    index: int
    code: str
    lo: int
    hi: int


@dataclass
class _CompiledTrans:
    process: int  # index into system processes (or -1 for property)
    decl_index: int
    source: int
    target: int
    guard: object
    kind: str  # "local", "send", "recv"
    channel: int = -1
    buffered: bool = False
    value: object = None
    target_slot: Optional[Slot] = None
    effects: tuple = ()
    label: str = ""


class CompiledModel:
    """A parsed :class:`Model` lowered to slot-indexed closures."""

    def __init__(self, model: Model):
        self.model = model
        self.property = model.property_process
        self.system = model.system_processes
        codes: list[str] = []
        self.slots: dict[tuple[Optional[str], str], Slot] = {}

        def add(key, code, lo, hi):
            slot = Slot(len(codes), code, lo, hi)
            codes.append(code)
            self.slots[key] = slot
            return slot

        for g in model.globals:
            add((None, g.name), "B" if g.type == "byte" else "h", *TYPE_RANGES[g.type])
        self.loc_slots = {}
        for p in self.system:
            code = "B" if len(p.states) <= 256 else "H"
            self.loc_slots[p.name] = add((p.name, "@loc"), code, 0, len(p.states) - 1)
            for var in p.locals:
                add((p.name, var.name), "B" if var.type == "byte" else "h", *TYPE_RANGES[var.type])
        self.chan_index = {c.name: i for i, c in enumerate(model.channels)}
        self.chan_slots: dict[str, tuple[int, int]] = {}
        for c in model.channels:
            if c.capacity > 0:
                count = add((c.name, "@count"), "B", 0, c.capacity)
                for k in range(c.capacity):
                    add((c.name, f"@{k}"), "h", *CHANNEL_RANGE)
                self.chan_slots[c.name] = (count.index, c.capacity)
        self.prop_slot = None
        if self.property is not None:
            code = "B" if len(self.property.states) <= 256 else "H"
            self.prop_slot = add((self.property.name, "@loc"), code, 0, len(self.property.states) - 1)
        self.struct = struct.Struct("<" + "".join(codes))
        self.width = self.struct.size
        self.offsets = []
        off = 0
        for code in codes:
            self.offsets.append(off)
            off += struct.calcsize("<" + code)

        initial = [0] * len(codes)
        for g in model.globals:
            initial[self.slots[(None, g.name)].index] = g.init
        for p in self.system:
            initial[self.loc_slots[p.name].index] = p.location_index(p.init)
            for var in p.locals:
                initial[self.slots[(p.name, var.name)].index] = var.init
        if self.property is not None:
            initial[self.prop_slot.index] = self.property.location_index(self.property.init)
        self.initial_values = tuple(initial)

        self._trans_by_loc = []
        for pi, p in enumerate(self.system):
            table = [[] for _ in p.states]
            for ti, t in enumerate(p.transitions):
                table[p.location_index(t.source)].append(self._compile_trans(p, pi, ti, t))
            self._trans_by_loc.append(table)
        self._receivers = {}  # (channel, process index) -> receive transitions by location
        for pi, table in enumerate(self._trans_by_loc):
            for loc, ts in enumerate(table):
                for ct in ts:
                    if ct.kind == "recv" and not ct.buffered:
                        self._receivers.setdefault(ct.channel, {}).setdefault(pi, [[] for _ in table])[loc].append(ct)
        self._prop_by_loc = []
        if self.property is not None:
            table = [[] for _ in self.property.states]
            for ti, t in enumerate(self.property.transitions):
                table[self.property.location_index(t.source)].append(
                    self._compile_trans(self.property, -1, ti, t))
            self._prop_by_loc = table
        self._accept_sets = [frozenset(p.location_index(a) for a in p.accept) for p in self.system]
        self._prop_accept = (frozenset(self.property.location_index(a) for a in self.property.accept)
                             if self.property is not None else frozenset())

    # -- expression lowering -----------------------------------------------------

    def _resolve(self, proc, ref: Ref) -> str:
        if ref.qualifier is None:
            if (proc.name, ref.name) in self.slots:
                return f"v[{self.slots[(proc.name, ref.name)].index}]"
            return f"v[{self.slots[(None, ref.name)].index}]"
        owner = self.model.process(ref.qualifier)
        if ref.name in owner.states:
            loc = owner.location_index(ref.name)
            if owner is self.property:
                return f"(1 if v[{self.prop_slot.index}] == {loc} else 0)"
            return f"(1 if v[{self.loc_slots[owner.name].index}] == {loc} else 0)"
        return f"v[{self.slots[(owner.name, ref.name)].index}]"

    def _source(self, proc, e) -> str:
        if isinstance(e, Num):
            return str(_w(e.value))
        if isinstance(e, Ref):
            return self._resolve(proc, e)
        if isinstance(e, Unary):
            inner = self._source(proc, e.operand)
            return f"(0 if {inner} else 1)" if e.op == "!" else f"_w(-{inner})"
        a, b = self._source(proc, e.left), self._source(proc, e.right)
        op = e.op
        if op in ("+", "-", "*"):
            return f"_w({a} {op} {b})"
        if op == "/":
            return f"_div({a}, {b})"
        if op == "%":
            return f"_mod({a}, {b})"
        if op == "&&":
            return f"(1 if ({a} and {b}) else 0)"
        if op == "||":
            return f"(1 if ({a} or {b}) else 0)"
        return f"(1 if {a} {op} {b} else 0)"

    def _lambda(self, proc, e):
        if e is None:
            return None
        return eval(f"lambda v: {self._source(proc, e)}", dict(_RUNTIME))

    def _target_slot(self, proc, ref: Ref) -> Slot:
        if (proc.name, ref.name) in self.slots:
            return self.slots[(proc.name, ref.name)]
        return self.slots[(None, ref.name)]

    def _compile_trans(self, proc, pi, ti, t) -> _CompiledTrans:
        ct = _CompiledTrans(
            process=pi, decl_index=ti,
            source=proc.location_index(t.source), target=proc.location_index(t.target),
            guard=self._lambda(proc, t.guard), kind="local",
            effects=tuple((self._target_slot(proc, a.target), self._lambda(proc, a.value), a.target.name)
                          for a in t.effects),
            label=f"{proc.name}:{t.source}->{t.target}#{ti}",
        )
        if t.sync is not None:
            chan = self.model.channel(t.sync.channel)
            ct.channel = self.chan_index[chan.name]
            ct.buffered = chan.capacity > 0
            if t.sync.direction == "!":
                ct.kind = "send"
                ct.value = self._lambda(proc, t.sync.value)
            else:
                ct.kind = "recv"
                ct.target_slot = self._target_slot(proc, t.sync.target)
        return ct

    # -- state helpers -------------------------------------------------------------

    def encode(self, values) -> bytes:
        return self.struct.pack(*values)

    def decode(self, state: bytes) -> tuple:
        return self.struct.unpack(state)

    def initial_state(self) -> bytes:
        return self.encode(self.initial_values)

    def offset_of(self, var: str, process: Optional[str] = None) -> int:
        """Byte offset of a variable inside the serialized state."""
        return self.offsets[self.slots[(process, var)].index]

    def describe(self, state: bytes) -> dict:
        """Structured, human-readable view of a state (inverse of :meth:`compose`)."""
        v = self.decode(state)
        out = {"globals": {g.name: v[self.slots[(None, g.name)].index] for g in self.model.globals},
               "processes": {}, "channels": {}, "property": None}
        for p in self.system:
            out["processes"][p.name] = (
                p.states[v[self.loc_slots[p.name].index]],
                {var.name: v[self.slots[(p.name, var.name)].index] for var in p.locals},
            )
        for name, (idx, cap) in self.chan_slots.items():
            out["channels"][name] = list(v[idx + 1: idx + 1 + v[idx]])
        if self.property is not None:
            out["property"] = self.property.states[v[self.prop_slot.index]]
        return out

    def compose(self, view: dict) -> bytes:
        v = [0] * len(self.initial_values)
        for name, value in view["globals"].items():
            v[self.slots[(None, name)].index] = value
        for p in self.system:
            loc, local = view["processes"][p.name]
            v[self.loc_slots[p.name].index] = p.location_index(loc)
            for name, value in local.items():
                v[self.slots[(p.name, name)].index] = value
        for name, (idx, cap) in self.chan_slots.items():
            items = view["channels"].get(name, [])
            if len(items) > cap:
                raise ValueError(f"channel {name} holds at most {cap} values")
            v[idx] = len(items)
            for k, item in enumerate(items):
                v[idx + 1 + k] = item
        if self.property is not None:
            v[self.prop_slot.index] = self.property.location_index(view["property"])
        return self.encode(v)

    # -- semantics -----------------------------------------------------------------

    def is_accepting(self, state: bytes) -> bool:
        if self.property is not None:
            off = self.offsets[self.prop_slot.index]
            if self.prop_slot.code == "B":
                loc = state[off]
            else:
                loc = int.from_bytes(state[off:off + 2], "little")
            return loc in self._prop_accept
        v = self.decode(state)
        return any(v[self.loc_slots[p.name].index] in acc for p, acc in zip(self.system, self._accept_sets) if acc)

    def property_location(self, state: bytes) -> Optional[int]:
        if self.prop_slot is None:
            return None
        off = self.offsets[self.prop_slot.index]
        if self.prop_slot.code == "B":
            return state[off]
        return int.from_bytes(state[off:off + 2], "little")

    def _apply(self, v: list, slot: Slot, value: int, state: bytes, label: str, name: str):
        if not slot.lo <= value <= slot.hi:
            raise ModelRuntimeError(f"value {value} assigned to {name} outside {slot.lo}..{slot.hi}", state, label)
        v[slot.index] = value

    def _effects(self, v: list, ct: _CompiledTrans, state: bytes):
        for slot, fn, name in ct.effects:
            self._apply(v, slot, fn(v), state, ct.label, name)

    def system_steps(self, state: bytes, pre: Optional[tuple] = None) -> list[list]:
        """Successor valuations of the system alone (property slot untouched)."""
        pre = self.decode(state) if pre is None else pre
        steps = []
        try:
            for pi, table in enumerate(self._trans_by_loc):
                loc = pre[self.loc_slots[self.system[pi].name].index]
                for ct in table[loc]:
                    if ct.guard is not None and not ct.guard(pre):
                        continue
                    if ct.kind == "local":
                        v = list(pre)
                        v[self.loc_slots[self.system[pi].name].index] = ct.target
                        self._effects(v, ct, state)
                        steps.append(v)
                    elif ct.buffered:
                        self._buffered(pre, pi, ct, state, steps)
                    elif ct.kind == "send":
                        self._rendezvous(pre, pi, ct, state, steps)
        except _EvalError as exc:
            raise ModelRuntimeError(str(exc), state) from None
        return steps

    def _buffered(self, pre, pi, ct, state, steps):
        chan = self.model.channels[ct.channel]
        idx, cap = self.chan_slots[chan.name]
        count = pre[idx]
        loc_idx = self.loc_slots[self.system[pi].name].index
        if ct.kind == "send":
            if count >= cap:
                return
            v = list(pre)
            value = ct.value(pre)
            if not CHANNEL_RANGE[0] <= value <= CHANNEL_RANGE[1]:
                raise ModelRuntimeError(f"value {value} sent on {chan.name} outside int range", state, ct.label)
            v[idx + 1 + count] = value
            v[idx] = count + 1
        else:
            if count == 0:
                return
            v = list(pre)
            value = pre[idx + 1]
            v[idx + 1: idx + cap] = pre[idx + 2: idx + 1 + cap]
            v[idx + cap] = 0
            v[idx] = count - 1
            self._apply(v, ct.target_slot, value, state, ct.label, "receive target")
        v[loc_idx] = ct.target
        self._effects(v, ct, state)
        steps.append(v)

    def _rendezvous(self, pre, pi, send, state, steps):
        partners = self._receivers.get(send.channel)
        if not partners:
            return
        value = None
        for qi in sorted(partners):
            if qi == pi:
                continue
            qloc = pre[self.loc_slots[self.system[qi].name].index]
            for recv in partners[qi][qloc]:
                if recv.guard is not None and not recv.guard(pre):
                    continue
                if value is None:
                    value = send.value(pre)
                v = list(pre)
                self._apply(v, recv.target_slot, value, state, recv.label, "receive target")
                v[self.loc_slots[self.system[pi].name].index] = send.target
                v[self.loc_slots[self.system[qi].name].index] = recv.target
                self._effects(v, send, state)
                self._effects(v, recv, state)
                steps.append(v)

    def successors(self, state: bytes) -> list[bytes]:
        pre = self.decode(state)
        steps = self.system_steps(state, pre)
        if self.property is None:
            return [self.encode(v) for v in steps]
        ploc = pre[self.prop_slot.index]
        try:
            moves = [ct.target for ct in self._prop_by_loc[ploc] if ct.guard is None or ct.guard(pre)]
        except _EvalError as exc:
            raise ModelRuntimeError(str(exc), state) from None
        out = []
        pidx = self.prop_slot.index
        for v in steps:
            for target in moves:
                v[pidx] = target
                out.append(self.encode(v))
        return out

    def relevant_indices(self) -> Optional[frozenset]:
        """Property location indices from which a cyclic accepting SCC is
        reachable (guards ignored).  ``None`` means nothing may be pruned."""
        if self.property is None:
            return None
        return frozenset(relevant_locations(self.property))


def relevant_locations(proc) -> set[int]:
    k = len(proc.states)
    succ = [set() for _ in range(k)]
    for t in proc.transitions:
        succ[proc.location_index(t.source)].add(proc.location_index(t.target))
    # transitive closure is fine: property automata are tiny
    reach = [set(s) for s in succ]
    changed = True
    while changed:
        changed = False
        for q in range(k):
            extra = set().union(*(reach[r] for r in reach[q])) - reach[q] if reach[q] else set()
            if extra:
                reach[q] |= extra
                changed = True
    accepting = {proc.location_index(a) for a in proc.accept}
    # an accepting location lies in a cyclic SCC iff it properly reaches itself
    good = {a for a in accepting if a in reach[a]}
    return {q for q in range(k) if q in good or reach[q] & good}


# -- module-level API ------------------------------------------------------------

def compiled(model: Model) -> CompiledModel:
    cm = getattr(model, "_compiled", None)
    if cm is None:
        cm = CompiledModel(model)
        model._compiled = cm
    return cm


def initial_state(model: Model) -> bytes:
    return compiled(model).initial_state()


def successors(model: Model, state: bytes) -> list[bytes]:
    return compiled(model).successors(state)


def is_accepting(model: Model, state: bytes) -> bool:
    return compiled(model).is_accepting(state)


def property_relevance(model: Model) -> Optional[frozenset]:
    """Names of the property locations worth exploring; ``None`` without a property."""
    idx = compiled(model).relevant_indices()
    if idx is None:
        return None
    return frozenset(model.property_process.states[i] for i in idx)
