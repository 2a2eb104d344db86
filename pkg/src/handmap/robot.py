"""Robot hand models: config loading, joint coupling, and marker kinematics.

A hand is a kinematic tree plus, per finger, the ordered list of actuated
command channels and two expected-marker attachments. Coupling rules derive
the remaining joints: ``mirror`` copies a source joint scaled by a ratio
(same-motor fingers), ``sequential`` splits one command across two joints so
the second starts moving when the first saturates at its limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import yaml

from .errors import CouplingCycle, DanglingReference, SchemaError
from .hand_model import FingerId
from .se3 import (FIXED, REVOLUTE, Joint, KinematicTree, Transform,
                  forward_kinematics, rotation_from_rpy)
from .validation import as_vector3

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class MirrorRule:
    source: str
    driven: str
    ratio: float

    def __post_init__(self):
        if self.driven == self.source:
            raise SchemaError(f"mirror rule drives its own source {self.source!r}")


@dataclass(frozen=True)
class SequentialRule:
    first: str
    second: str

    def __post_init__(self):
        if self.first == self.second:
            raise SchemaError("sequential rule needs two distinct joints")


@dataclass(frozen=True)
class MarkerAttachment:
    link: str
    offset: np.ndarray

    def __post_init__(self):
        off = as_vector3(self.offset, f"marker offset on {self.link!r}")
        off.flags.writeable = False
        object.__setattr__(self, "offset", off)


@dataclass(frozen=True)
class CapsuleSpec:
    """Contact-surface capsule attached to a link, in link-local coordinates."""

    link: str
    start: np.ndarray
    end: np.ndarray
    radius: float
    palmar: np.ndarray  # local direction of the contact (palmar) side

    def __post_init__(self):
        for name in ("start", "end", "palmar"):
            v = as_vector3(getattr(self, name), f"capsule {name}")
            v.flags.writeable = False
            object.__setattr__(self, name, v)
        if float(self.radius) <= 0.0:
            raise SchemaError(f"capsule on {self.link!r}: radius must be positive")


@dataclass(frozen=True)
class FingerMap:
    joints: tuple          # ordered actuated command channels (size N_i)
    markers: tuple         # exactly two MarkerAttachments (mid, tip)


# --- fast compiled chains -------------------------------------------------

def _mat_mul(a, b):
    return (a[0] * b[0] + a[1] * b[3] + a[2] * b[6],
            a[0] * b[1] + a[1] * b[4] + a[2] * b[7],
            a[0] * b[2] + a[1] * b[5] + a[2] * b[8],
            a[3] * b[0] + a[4] * b[3] + a[5] * b[6],
            a[3] * b[1] + a[4] * b[4] + a[5] * b[7],
            a[3] * b[2] + a[4] * b[5] + a[5] * b[8],
            a[6] * b[0] + a[7] * b[3] + a[8] * b[6],
            a[6] * b[1] + a[7] * b[4] + a[8] * b[7],
            a[6] * b[2] + a[7] * b[5] + a[8] * b[8])


def _mat_vec(a, v):
    return (a[0] * v[0] + a[1] * v[1] + a[2] * v[2],
            a[3] * v[0] + a[4] * v[1] + a[5] * v[2],
            a[6] * v[0] + a[7] * v[1] + a[8] * v[2])


def _axis_rotation(axis, angle):
    x, y, z = axis
    c = math.cos(angle)
    s = math.sin(angle)
    ic = 1.0 - c
    return (c + x * x * ic, x * y * ic - z * s, x * z * ic + y * s,
            y * x * ic + z * s, c + y * y * ic, y * z * ic - x * s,
            z * x * ic - y * s, z * y * ic + x * s, c + z * z * ic)


_IDENTITY9 = (1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0)


def _axis_kind(axis) -> str:
    for kind, unit in (("x", (1.0, 0.0, 0.0)), ("y", (0.0, 1.0, 0.0)),
                       ("z", (0.0, 0.0, 1.0))):
        if all(abs(a - u) < 1e-12 for a, u in zip(axis, unit)):
            return kind
    return "g"


class _CompiledChain:
    """Root-to-point kinematics flattened into fixed-transform + joint steps.

    ``point`` is the embodiment objective's innermost call; the rotation is
    carried as nine scalars and canonical joint axes use specialized column
    updates instead of a general matrix product.
    """

    def __init__(self, joints, offset):
        steps = []
        pending_r = _IDENTITY9
        pending_t = (0.0, 0.0, 0.0)
        for joint in joints:
            o = joint.origin
            o_r = tuple(float(v) for v in o.rotation.ravel())
            o_t = tuple(float(v) for v in o.translation)
            moved = _mat_vec(pending_r, o_t)
            pending_t = (pending_t[0] + moved[0], pending_t[1] + moved[1],
                         pending_t[2] + moved[2])
            pending_r = _mat_mul(pending_r, o_r)
            if joint.kind == REVOLUTE:
                axis = tuple(float(v) for v in joint.axis)
                fixed_r = None if pending_r == _IDENTITY9 else pending_r
                steps.append((fixed_r, pending_t, _axis_kind(axis), axis, joint.name))
                pending_r = _IDENTITY9
                pending_t = (0.0, 0.0, 0.0)
        self._steps = tuple(steps)
        tail = _mat_vec(pending_r, tuple(float(v) for v in offset))
        self._tail = (tail[0] + pending_t[0], tail[1] + pending_t[1],
                      tail[2] + pending_t[2])

    def point(self, values) -> tuple:
        r00 = 1.0; r01 = 0.0; r02 = 0.0
        r10 = 0.0; r11 = 1.0; r12 = 0.0
        r20 = 0.0; r21 = 0.0; r22 = 1.0
        tx = 0.0; ty = 0.0; tz = 0.0
        cos = math.cos
        sin = math.sin
        for fixed_r, (fx, fy, fz), kind, axis, name in self._steps:
            tx += r00 * fx + r01 * fy + r02 * fz
            ty += r10 * fx + r11 * fy + r12 * fz
            tz += r20 * fx + r21 * fy + r22 * fz
            if fixed_r is not None:
                b0, b1, b2, b3, b4, b5, b6, b7, b8 = fixed_r
                n00 = r00 * b0 + r01 * b3 + r02 * b6
                n01 = r00 * b1 + r01 * b4 + r02 * b7
                n02 = r00 * b2 + r01 * b5 + r02 * b8
                n10 = r10 * b0 + r11 * b3 + r12 * b6
                n11 = r10 * b1 + r11 * b4 + r12 * b7
                n12 = r10 * b2 + r11 * b5 + r12 * b8
                n20 = r20 * b0 + r21 * b3 + r22 * b6
                n21 = r20 * b1 + r21 * b4 + r22 * b7
                n22 = r20 * b2 + r21 * b5 + r22 * b8
                r00, r01, r02 = n00, n01, n02
                r10, r11, r12 = n10, n11, n12
                r20, r21, r22 = n20, n21, n22
            q = values[name]
            c = cos(q)
            s = sin(q)
            if kind == "x":
                n01 = r01 * c + r02 * s; n02 = r02 * c - r01 * s
                n11 = r11 * c + r12 * s; n12 = r12 * c - r11 * s
                n21 = r21 * c + r22 * s; n22 = r22 * c - r21 * s
                r01, r02, r11, r12, r21, r22 = n01, n02, n11, n12, n21, n22
            elif kind == "z":
                n00 = r00 * c + r01 * s; n01 = r01 * c - r00 * s
                n10 = r10 * c + r11 * s; n11 = r11 * c - r10 * s
                n20 = r20 * c + r21 * s; n21 = r21 * c - r20 * s
                r00, r01, r10, r11, r20, r21 = n00, n01, n10, n11, n20, n21
            elif kind == "y":
                n00 = r00 * c - r02 * s; n02 = r00 * s + r02 * c
                n10 = r10 * c - r12 * s; n12 = r10 * s + r12 * c
                n20 = r20 * c - r22 * s; n22 = r20 * s + r22 * c
                r00, r02, r10, r12, r20, r22 = n00, n02, n10, n12, n20, n22
            else:
                b0, b1, b2, b3, b4, b5, b6, b7, b8 = _axis_rotation(axis, q)
                n00 = r00 * b0 + r01 * b3 + r02 * b6
                n01 = r00 * b1 + r01 * b4 + r02 * b7
                n02 = r00 * b2 + r01 * b5 + r02 * b8
                n10 = r10 * b0 + r11 * b3 + r12 * b6
                n11 = r10 * b1 + r11 * b4 + r12 * b7
                n12 = r10 * b2 + r11 * b5 + r12 * b8
                n20 = r20 * b0 + r21 * b3 + r22 * b6
                n21 = r20 * b1 + r21 * b4 + r22 * b7
                n22 = r20 * b2 + r21 * b5 + r22 * b8
                r00, r01, r02 = n00, n01, n02
                r10, r11, r12 = n10, n11, n12
                r20, r21, r22 = n20, n21, n22
        ox, oy, oz = self._tail
        return (tx + r00 * ox + r01 * oy + r02 * oz,
                ty + r10 * ox + r11 * oy + r12 * oz,
                tz + r20 * ox + r21 * oy + r22 * oz)

    def joint_names(self) -> tuple:
        return tuple(step[4] for step in self._steps)


class RobotHandModel:
    """Validated, immutable robot hand description."""

    def __init__(self, name, tree: KinematicTree, fingers: dict, couplings,
                 actuated, control_rate: float = 0.0, contact_capsules=None):
        self.name = str(name)
        self.tree = tree
        self.fingers = {FingerId(f): m for f, m in fingers.items()}
        self.couplings = tuple(couplings)
        self.actuated = tuple(actuated)
        self.control_rate = float(control_rate)
        self.contact_capsules = {FingerId(f): tuple(c)
                                 for f, c in (contact_capsules or {}).items()}
        self._validate()
        self._order_couplings()
        self._compile_command_bounds()
        self._compile_chains()
        self._compile_groups()

    # -- validation --

    def _validate(self):
        joint_names = set(self.tree.joint_map)
        link_names = set(self.tree.links)
        revolute = {j.name for j in self.tree.revolute_joints()}

        for name in self.actuated:
            if name not in joint_names:
                raise DanglingReference(f"actuated joint {name!r} is not in the tree")
            if name not in revolute:
                raise SchemaError(f"actuated joint {name!r} must be revolute")
        if len(set(self.actuated)) != len(self.actuated):
            raise SchemaError("duplicate actuated joint names")

        driven = {}
        for rule in self.couplings:
            names = (rule.driven,) if isinstance(rule, MirrorRule) else (rule.second,)
            sources = (rule.source,) if isinstance(rule, MirrorRule) else (rule.first,)
            for n in names + sources:
                if n not in revolute:
                    raise DanglingReference(f"coupling references unknown revolute joint {n!r}")
            for n in names:
                if n in driven:
                    raise SchemaError(f"joint {n!r} driven by more than one coupling rule")
                driven[n] = rule
        actuated_set = set(self.actuated)
        for n in driven:
            if n in actuated_set:
                raise SchemaError(f"joint {n!r} is both actuated and coupling-driven")
        for j in self.tree.revolute_joints():
            if j.name not in actuated_set and j.name not in driven:
                raise SchemaError(f"revolute joint {j.name!r} is neither actuated nor driven")
        for rule in self.couplings:
            if isinstance(rule, SequentialRule):
                if rule.first not in actuated_set:
                    raise SchemaError(
                        f"sequential rule: first joint {rule.first!r} must be actuated")
                for n in (rule.first, rule.second):
                    limits = self.tree.joint_map[n].limits
                    if limits is None:
                        raise SchemaError(f"sequential joint {n!r} needs limits")
                    if limits[0] != 0.0:
                        raise SchemaError(
                            f"sequential joint {n!r} must have a lower limit of 0")

        for finger, fmap in self.fingers.items():
            if len(fmap.markers) != 2:
                raise SchemaError(f"finger {finger.name}: exactly two markers required")
            for marker in fmap.markers:
                if marker.link not in link_names:
                    raise DanglingReference(
                        f"finger {finger.name}: marker link {marker.link!r} not in tree")
            for joint in fmap.joints:
                if joint not in actuated_set:
                    raise DanglingReference(
                        f"finger {finger.name}: command channel {joint!r} is not actuated")
        for finger, capsules in self.contact_capsules.items():
            for capsule in capsules:
                if capsule.link not in link_names:
                    raise DanglingReference(
                        f"contact capsule link {capsule.link!r} not in tree")

    def _order_couplings(self):
        # Mirror chains may source from other driven joints; resolve in
        # dependency order and reject cycles.
        produced_by = {}
        for rule in self.couplings:
            produced_by[rule.driven if isinstance(rule, MirrorRule) else rule.second] = rule
        ordered = []
        state = {}  # rule id -> 1 visiting, 2 done

        def visit(rule):
            rid = id(rule)
            if state.get(rid) == 2:
                return
            if state.get(rid) == 1:
                raise CouplingCycle("coupling rules form a cycle")
            state[rid] = 1
            source = rule.source if isinstance(rule, MirrorRule) else rule.first
            upstream = produced_by.get(source)
            if upstream is not None:
                visit(upstream)
            state[rid] = 2
            ordered.append(rule)

        for rule in self.couplings:
            visit(rule)
        self._ordered_couplings = tuple(ordered)

    def _compile_command_bounds(self):
        bounds = {}
        sequential_first = {r.first: r for r in self.couplings
                            if isinstance(r, SequentialRule)}
        for name in self.actuated:
            limits = self.tree.joint_map[name].limits
            if limits is None:
                limits = (-math.pi, math.pi)
            rule = sequential_first.get(name)
            if rule is not None:
                second_limits = self.tree.joint_map[rule.second].limits
                limits = (0.0, limits[1] + second_limits[1])
            bounds[name] = limits
        self._command_bounds = bounds
        self._sequential_seconds = {r.first: r.second for r in self.couplings
                                    if isinstance(r, SequentialRule)}

    def _compile_chains(self):
        path_cache = {}

        def path_to(link):
            if link not in path_cache:
                chain = []
                current = link
                by_child = {j.child: j for j in self.tree.joints}
                while current != self.tree.root:
                    joint = by_child[current]
                    chain.append(joint)
                    current = joint.parent
                path_cache[link] = tuple(reversed(chain))
            return path_cache[link]

        self._marker_chains = {}
        for finger, fmap in self.fingers.items():
            chains = tuple(_CompiledChain(path_to(m.link), m.offset)
                           for m in fmap.markers)
            self._marker_chains[finger] = chains

    def _compile_groups(self):
        # Fingers whose command channels overlap (e.g. one motor driving
        # three fingers) must be optimized jointly; union-find over fingers.
        parent = {f: f for f in self.fingers}

        def find(f):
            while parent[f] != f:
                parent[f] = parent[parent[f]]
                f = parent[f]
            return f

        fingers = list(self.fingers)
        for i, a in enumerate(fingers):
            for b in fingers[i + 1:]:
                if set(self.fingers[a].joints) & set(self.fingers[b].joints):
                    parent[find(b)] = find(a)
        groups: dict = {}
        for f in fingers:
            groups.setdefault(find(f), []).append(f)
        self.command_groups = tuple(tuple(g) for g in groups.values())

    # -- public API --

    def command_bounds(self, joint: str) -> tuple:
        """Admissible command range; wider than the joint limit for the first
        joint of a sequential pair, whose command covers both joints."""
        return self._command_bounds[joint]

    @property
    def free_actuated(self) -> tuple:
        return tuple(n for n in self.actuated
                     if self._command_bounds[n][0] < self._command_bounds[n][1])

    def finger_commands(self, finger: FingerId) -> tuple:
        return self.fingers[FingerId(finger)].joints

    def clamp_commands(self, values: dict) -> tuple[dict, bool]:
        clamped = {}
        changed = False
        for name in self.actuated:
            lo, hi = self._command_bounds[name]
            v = float(values[name])
            c = min(max(v, lo), hi)
            changed = changed or (c != v)
            clamped[name] = c
        return clamped, changed


def apply_coupling(model: RobotHandModel, actuated_values: dict) -> dict:
    """Resolve all revolute joints from actuated commands.

    Commands outside their bounds are clamped. A sequential pair's command
    may arrive either entirely on the first joint or already split across
    both (their sum is used), which makes the operation idempotent on fully
    resolved joint maps.
    """
    values = {}
    for name in model.actuated:
        lo, hi = model._command_bounds[name]
        value = float(actuated_values[name])
        second = model._sequential_seconds.get(name)
        if second is not None and second in actuated_values:
            value += float(actuated_values[second])
        values[name] = min(max(value, lo), hi)
    for rule in model._ordered_couplings:
        if isinstance(rule, MirrorRule):
            values[rule.driven] = rule.ratio * values[rule.source]
        else:
            lim1 = model.tree.joint_map[rule.first].limits[1]
            command = values[rule.first]
            values[rule.first] = min(command, lim1)
            values[rule.second] = max(0.0, command - lim1)
    return values


def finger_marker_points(model: RobotHandModel, finger: FingerId, r):
    """Expected-marker positions (mid, tip) of one finger in the hand base frame.

    ``r`` holds the finger's actuated commands in ``finger_commands`` order;
    couplings are resolved internally, other commands sit at their clamped
    neutral (zero) position.
    """
    finger = FingerId(finger)
    commands = model.finger_commands(finger)
    r = np.asarray(r, dtype=float)
    if r.shape != (len(commands),):
        raise ValueError(f"expected {len(commands)} commands for {finger.name}, "
                         f"got shape {r.shape}")
    actuated = {name: 0.0 for name in model.actuated}
    actuated.update(zip(commands, (float(v) for v in r)))
    values = apply_coupling(model, actuated)
    c1, c2 = model._marker_chains[finger]
    return np.array(c1.point(values)), np.array(c2.point(values))


def robot_link_poses(model: RobotHandModel, actuated_values: dict) -> dict:
    """Pose of every link in the hand base frame, couplings resolved."""
    values = apply_coupling(model, actuated_values)
    return forward_kinematics(model.tree, values)


# --- config loading -------------------------------------------------------

def _require(mapping, key, context):
    if not isinstance(mapping, dict) or key not in mapping:
        raise SchemaError(f"{context}: missing required key {key!r}")
    return mapping[key]


def _origin_from(entry, context) -> Transform:
    xyz = entry.get("xyz", (0.0, 0.0, 0.0))
    rpy = entry.get("rpy", (0.0, 0.0, 0.0))
    try:
        return Transform(rotation_from_rpy(rpy), as_vector3(xyz, "xyz"))
    except ValueError as exc:
        raise SchemaError(f"{context}: bad origin ({exc})")


def load_hand_config(stream) -> RobotHandModel:
    """Parse and validate a hand-config document (YAML text or stream)."""
    try:
        doc = yaml.safe_load(stream)
    except yaml.YAMLError as exc:
        raise SchemaError(f"invalid YAML: {exc}")
    if not isinstance(doc, dict):
        raise SchemaError("hand config must be a mapping")
    version = _require(doc, "schema_version", "hand config")
    if version != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema_version {version!r}")
    name = _require(doc, "name", "hand config")

    links = _require(doc, "links", "hand config")
    joints = []
    for entry in _require(doc, "joints", "hand config"):
        jname = _require(entry, "name", "joint")
        kind = entry.get("type", FIXED)
        if kind not in (REVOLUTE, FIXED):
            raise SchemaError(f"joint {jname!r}: unknown type {kind!r}")
        limits = entry.get("limits")
        if kind == REVOLUTE and limits is None:
            raise SchemaError(f"joint {jname!r}: revolute joints need limits")
        try:
            joints.append(Joint(
                name=jname,
                parent=_require(entry, "parent", f"joint {jname!r}"),
                child=_require(entry, "child", f"joint {jname!r}"),
                origin=_origin_from(entry.get("origin", {}), f"joint {jname!r}"),
                kind=kind,
                axis=entry.get("axis"),
                limits=tuple(limits) if limits is not None else None,
            ))
        except ValueError as exc:
            raise SchemaError(f"joint {jname!r}: {exc}")
    try:
        tree = KinematicTree(links, joints)
    except ValueError as exc:
        message = str(exc)
        if "unknown parent link" in message or "unknown child link" in message:
            raise DanglingReference(message)
        raise SchemaError(message)

    fingers = {}
    for fname, entry in _require(doc, "fingers", "hand config").items():
        try:
            finger = FingerId[fname]
        except KeyError:
            raise SchemaError(f"unknown finger name {fname!r}")
        markers = tuple(
            MarkerAttachment(link=_require(m, "link", f"{fname} marker"),
                             offset=_require(m, "offset", f"{fname} marker"))
            for m in _require(entry, "markers", f"finger {fname!r}"))
        fingers[finger] = FingerMap(
            joints=tuple(_require(entry, "joints", f"finger {fname!r}")),
            markers=markers)

    couplings = []
    for entry in doc.get("couplings", ()):
        kind = _require(entry, "type", "coupling")
        if kind == "mirror":
            couplings.append(MirrorRule(source=_require(entry, "source", "mirror rule"),
                                        driven=_require(entry, "driven", "mirror rule"),
                                        ratio=float(entry.get("ratio", 1.0))))
        elif kind == "sequential":
            couplings.append(SequentialRule(first=_require(entry, "first", "sequential rule"),
                                            second=_require(entry, "second", "sequential rule")))
        else:
            raise SchemaError(f"unknown coupling type {kind!r}")

    contact = {}
    for fname, entries in (doc.get("contact_surfaces") or {}).items():
        try:
            finger = FingerId[fname]
        except KeyError:
            raise SchemaError(f"unknown finger name {fname!r} in contact_surfaces")
        contact[finger] = tuple(
            CapsuleSpec(link=_require(c, "link", "contact capsule"),
                        start=_require(c, "start", "contact capsule"),
                        end=_require(c, "end", "contact capsule"),
                        radius=float(_require(c, "radius", "contact capsule")),
                        palmar=c.get("palmar", (0.0, 0.0, -1.0)))
            for c in entries)

    return RobotHandModel(
        name=name,
        tree=tree,
        fingers=fingers,
        couplings=couplings,
        actuated=tuple(_require(doc, "actuated", "hand config")),
        control_rate=float(doc.get("control_rate", 0.0)),
        contact_capsules=contact,
    )
