"""JSON simulation and sweep configuration.

A simulation config is a JSON object with these sections (all optional
except ``grid``; defaults shown)::

    {
      "grid":        {"L": 3.14159, "N": 32},
      "physics":     {"R": 1.0, "kappa": 1.0, "g": 0.0},
      "initial":     {"eta_modes": [{"mode": 2, "amplitude": 1e-3, "phase": 0.0}],
                      "psi_modes": [],
                      "growing_mode": false,
                      "random": null,
                      "snapshot": null},
      "integrator":  {"dt": "auto", "cfl": 0.5, "horizon": 1.0, "save_every": null,
                      "diag_every": 1, "mollify_eps": 0.0, "mollify_mode": "flat",
                      "mollify_rhs": false, "dealias": true},
      "solver":      {"M": null, "tol": 1e-10},
      "diagnostics": {"sobolev_s": 3.0, "modes": []},
      "output":      {"directory": "out", "formats": ["csv", "svg", "cjsnap"]}
    }

Mode entries add ``amplitude * cos(xi_k z + phase)`` with ``xi_k = pi k / L``
to ``eta - R`` or to ``psi``.  ``growing_mode`` gives each unstable ``eta``
mode the potential of the exponentially growing linear solution.
``random`` (``{"field": "psi", "amplitude": a, "decay": 4.0}``) adds a
random-phase spectrum ``a <xi>^-decay`` seeded by ``--seed``.
A sweep file holds ``{"base": <config>, "axes": {...}, "threads": 1,
"cap": 64}``; axis names are dotted config paths, plus ``kR`` which sets
``L`` so that the first ``eta`` mode has ``xi R = kR``.
"""
import copy
import hashlib
import itertools
import json
from dataclasses import dataclass

import numpy as np

from .dno import flat_multiplier
from .dynamics import JetState, StepOptions, load_snapshot, stability_dt
from .errors import ConfigError, InvalidGrid, OddPointCount
from .grid import make_grid
from .linstab import sigma_squared

DEFAULTS = {
    "grid": {"L": np.pi, "N": 32},
    "physics": {"R": 1.0, "kappa": 1.0, "g": 0.0},
    "initial": {"eta_modes": [], "psi_modes": [], "growing_mode": False,
                "random": None, "snapshot": None},
    "integrator": {"dt": "auto", "cfl": 0.5, "horizon": 1.0, "save_every": None,
                   "diag_every": 1, "mollify_eps": 0.0, "mollify_mode": "flat",
                   "mollify_rhs": False, "dealias": True},
    "solver": {"M": None, "tol": 1e-10},
    "diagnostics": {"sobolev_s": 3.0, "modes": []},
    "output": {"directory": "out", "formats": ["csv", "svg", "cjsnap"]},
}
FORMATS = {"csv", "svg", "cjsnap"}


def _merge(base, override):
    out = copy.deepcopy(base)
    for key, val in override.items():
        if key not in out:
            raise ConfigError(f"unknown config key {key!r}")
        if isinstance(out[key], dict) and isinstance(val, dict):
            for sub in val:
                if sub not in out[key]:
                    raise ConfigError(f"unknown config key {key}.{sub}")
            out[key].update(val)
        else:
            out[key] = val
    return out


def config_hash(data):
    text = json.dumps(data, sort_keys=True, separators=(",", ":"), default=float)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


@dataclass
class SimConfig:
    data: dict
    seed: int = 0

    @classmethod
    def from_dict(cls, raw, seed=0):
        cfg = cls(_merge(DEFAULTS, raw), seed)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path, seed=0):
        with open(path) as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from exc
        return cls.from_dict(raw, seed)

    # accessors ------------------------------------------------------------
    def __getitem__(self, key):
        return self.data[key]

    @property
    def hash(self):
        return config_hash({"config": self.data, "seed": self.seed})

    def grid(self):
        try:
            return make_grid(self["grid"]["L"], self["grid"]["N"])
        except (InvalidGrid, OddPointCount) as exc:
            raise ConfigError(str(exc)) from exc

    @property
    def horizon(self):
        return float(self["integrator"]["horizon"])

    @property
    def save_every(self):
        v = self["integrator"]["save_every"]
        return None if v is None else float(v)

    @property
    def diag_every(self):
        return int(self["integrator"]["diag_every"])

    @property
    def sobolev_s(self):
        return float(self["diagnostics"]["sobolev_s"])

    @property
    def modes(self):
        return tuple(int(k) for k in self["diagnostics"]["modes"])

    def step_options(self):
        integ, solver = self["integrator"], self["solver"]
        return StepOptions(M=solver["M"], tol=float(solver["tol"]), dealias=bool(integ["dealias"]),
                           mollify_eps=float(integ["mollify_eps"]),
                           mollify_mode=integ["mollify_mode"],
                           mollify_rhs=bool(integ["mollify_rhs"]))

    def time_step(self):
        integ = self["integrator"]
        if integ["dt"] == "auto" or integ["dt"] is None:
            dt = stability_dt(self.grid(), self["physics"]["kappa"], integ["cfl"])
            if not np.isfinite(dt):
                raise ConfigError("automatic dt needs kappa > 0; give dt explicitly")
            return float(dt)
        return float(integ["dt"])

    # validation -----------------------------------------------------------
    def validate(self):
        grid = self.grid()
        ph = self["physics"]
        if not ph["R"] > 0:
            raise ConfigError("physics.R must be positive")
        if ph["kappa"] < 0:
            raise ConfigError("physics.kappa must be nonnegative")
        integ = self["integrator"]
        if integ["horizon"] < 0:
            raise ConfigError("integrator.horizon must be nonnegative")
        if integ["dt"] not in ("auto", None):
            if not float(integ["dt"]) > 0:
                raise ConfigError("integrator.dt must be positive")
            limit = stability_dt(grid, ph["kappa"], 1.0)
            if float(integ["dt"]) > limit:
                raise ConfigError(f"integrator.dt exceeds the stability bound {limit:.3e}")
        if integ["mollify_mode"] not in ("flat", "full"):
            raise ConfigError("integrator.mollify_mode must be 'flat' or 'full'")
        if integ["mollify_eps"] < 0:
            raise ConfigError("integrator.mollify_eps must be nonnegative")
        if int(integ["diag_every"]) < 1:
            raise ConfigError("integrator.diag_every must be at least 1")
        if self["solver"]["tol"] <= 0:
            raise ConfigError("solver.tol must be positive")
        bad = set(self["output"]["formats"]) - FORMATS
        if bad:
            raise ConfigError(f"unknown output formats {sorted(bad)}")
        init = self["initial"]
        for key in ("eta_modes", "psi_modes"):
            for m in init[key]:
                if not isinstance(m, dict) or "mode" not in m or "amplitude" not in m:
                    raise ConfigError(f"initial.{key} entries need 'mode' and 'amplitude'")
                if abs(int(m["mode"])) >= grid.N // 2:
                    raise ConfigError(f"initial mode {m['mode']} is not resolved on N = {grid.N}")
        rnd = init["random"]
        if rnd is not None and rnd.get("field", "psi") not in ("eta", "psi"):
            raise ConfigError("initial.random.field must be 'eta' or 'psi'")
        if init["snapshot"] is None:
            eta = self._initial_fields(grid)[0]
            if eta.min() <= 1e-6 * ph["R"]:
                raise ConfigError("initial radius touches the pinch-off floor")

    # initial data ---------------------------------------------------------
    def _initial_fields(self, grid):
        ph, init = self["physics"], self["initial"]
        R = float(ph["R"])
        eta = np.full(grid.N, R)
        psi = np.zeros(grid.N)
        for m in init["eta_modes"]:
            xi = np.pi * int(m["mode"]) / grid.L
            a, phase = float(m["amplitude"]), float(m.get("phase", 0.0))
            eta += a * np.cos(xi * grid.z + phase)
            if init["growing_mode"] and xi != 0:
                s2 = float(sigma_squared(R, ph["kappa"], xi))
                if s2 > 0:
                    psi += np.sqrt(s2) / flat_multiplier(R, xi) * a * np.cos(xi * grid.z + phase)
        for m in init["psi_modes"]:
            xi = np.pi * int(m["mode"]) / grid.L
            psi += float(m["amplitude"]) * np.cos(xi * grid.z + float(m.get("phase", 0.0)))
        rnd = init["random"]
        if rnd is not None:
            rng = np.random.default_rng(self.seed)
            amp = float(rnd.get("amplitude", 1e-3))
            decay = float(rnd.get("decay", 4.0))
            c = amp * (1.0 + grid.xi ** 2) ** (-0.5 * decay) * np.exp(2j * np.pi * rng.random(grid.N))
            c[0] = 0.0
            c[grid.nyquist] = 0.0
            half = grid.N // 2
            c[half + 1:] = np.conj(c[1:half][::-1])
            field = grid.inverse(c)
            if rnd.get("field", "psi") == "eta":
                eta += field
            else:
                psi += field
        return eta, psi

    def initial_state(self):
        ph = self["physics"]
        snap = self["initial"]["snapshot"]
        if snap is not None:
            state = load_snapshot(snap)
            grid = self.grid()
            if state.grid != grid:
                raise ConfigError("snapshot grid differs from the config grid")
            return state
        grid = self.grid()
        eta, psi = self._initial_fields(grid)
        return JetState(grid, 0.0, eta, psi, float(ph["R"]), float(ph["kappa"]), float(ph["g"]))


def set_path(data, path, value):
    keys = path.split(".")
    node = data
    for k in keys[:-1]:
        if k not in node or not isinstance(node[k], dict):
            raise ConfigError(f"sweep axis {path!r} does not name a config entry")
        node = node[k]
    if keys[-1] not in node:
        raise ConfigError(f"sweep axis {path!r} does not name a config entry")
    node[keys[-1]] = value


@dataclass
class SweepSpec:
    base: dict
    axes: dict
    threads: int = 1
    cap: int = 64

    @classmethod
    def from_dict(cls, raw):
        if "base" not in raw:
            raise ConfigError("sweep file needs a 'base' config")
        spec = cls(raw["base"], dict(raw.get("axes", {})), int(raw.get("threads", 1)),
                   int(raw.get("cap", 64)))
        spec.validate()
        return spec

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def size(self):
        n = 1
        for vals in self.axes.values():
            n *= len(vals)
        return n

    def validate(self):
        if self.threads < 1:
            raise ConfigError("threads must be at least 1")
        for name, vals in self.axes.items():
            if not isinstance(vals, list) or not vals:
                raise ConfigError(f"sweep axis {name!r} needs a nonempty list")
        if self.size() > self.cap:
            raise ConfigError(f"sweep has {self.size()} runs, cap is {self.cap}")
        for _, cfg in self.expand():
            SimConfig.from_dict(cfg)

    def expand(self):
        """``(parameters, config dict)`` for every point of the product, in order."""
        names = list(self.axes)
        full = _merge(DEFAULTS, self.base)
        for combo in itertools.product(*(self.axes[n] for n in names)):
            cfg = copy.deepcopy(full)
            params = dict(zip(names, combo))
            for name, val in params.items():
                if name == "kR":
                    modes = cfg["initial"]["eta_modes"]
                    k = int(modes[0]["mode"]) if modes else 1
                    cfg["grid"]["L"] = np.pi * k * cfg["physics"]["R"] / float(val)
                else:
                    set_path(cfg, name, val)
            yield params, cfg
