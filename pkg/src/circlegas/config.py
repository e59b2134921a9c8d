"""Flat text run configuration.

Format: one `section.key = value` per line; `#` starts a comment.
Sections: prior (lambda_c, alpha_c, beta_c, d, epsilon, r0_hat),
likelihood (mu, sigma, mu_bar, sigma_bar, lambda_i), evolve (dt_cap,
max_iters, redistance_every, band_half_width, tol), io (out_dir).
`prior.beta_c = auto` solves the balance equation and validates it.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from .levelset import EvolveOpts
from .likelihood import LikelihoodParams
from .stability import PriorParams, StabilityReport, beta_for_minimum, validate

__all__ = ["RunConfig", "parse_config", "load_config", "config_hash", "InvalidConfig"]


class InvalidConfig(ValueError):
    """Malformed config text (unknown key, bad value, missing field)."""


_PRIOR_KEYS = {"lambda_c", "alpha_c", "beta_c", "d", "epsilon", "r0_hat"}
_LIK_KEYS = {"mu", "sigma", "mu_bar", "sigma_bar", "lambda_i"}
_EVOLVE_KEYS = {"dt_cap", "max_iters", "redistance_every", "band_half_width", "tol"}
_IO_KEYS = {"out_dir"}


@dataclass
class RunConfig:
    """Parsed key/value sets; resolve() turns them into parameter objects."""

    prior: dict = field(default_factory=dict)
    likelihood: dict = field(default_factory=dict)
    evolve: dict = field(default_factory=dict)
    io: dict = field(default_factory=dict)
    text: str = ""

    @property
    def beta_is_auto(self) -> bool:
        return str(self.prior.get("beta_c", "")).strip() == "auto"

    def prior_params(self) -> PriorParams | None:
        """PriorParams from the prior section, solving `auto` beta.

        Returns None when the section is absent.  Raises ValueError (from
        PriorParams) on out-of-range values; an `auto` beta that fails
        validation raises InvalidConfig with the validator's reason.
        """
        if not self.prior:
            return None
        missing = _PRIOR_KEYS - set(self.prior)
        if missing:
            raise InvalidConfig(f"prior section missing {sorted(missing)}")
        p = {k: self.prior[k] for k in _PRIOR_KEYS}
        if self.beta_is_auto:
            beta = beta_for_minimum(
                float(p["lambda_c"]), float(p["alpha_c"]),
                float(p["r0_hat"]), float(p["d"]), float(p["epsilon"]),
            )
        else:
            beta = float(p["beta_c"])
        params = PriorParams(
            float(p["lambda_c"]), float(p["alpha_c"]), beta,
            float(p["d"]), float(p["epsilon"]), float(p["r0_hat"]),
        )
        if self.beta_is_auto:
            report = validate(params)
            if not report.valid:
                raise InvalidConfig(
                    f"auto beta = {beta:.6g} rejected: {report.reason}"
                )
        return params

    def validated(self) -> tuple[PriorParams, StabilityReport]:
        params = self.prior_params()
        if params is None:
            raise InvalidConfig("config has no prior section")
        return params, validate(params)

    def likelihood_params(self) -> LikelihoodParams | None:
        if not self.likelihood:
            return None
        missing = _LIK_KEYS - set(self.likelihood)
        if missing:
            raise InvalidConfig(f"likelihood section missing {sorted(missing)}")
        v = {k: float(self.likelihood[k]) for k in _LIK_KEYS}
        return LikelihoodParams(**v)

    def evolve_opts(self) -> EvolveOpts:
        opts = EvolveOpts()
        e = self.evolve
        if "dt_cap" in e:
            opts.dt_cap = float(e["dt_cap"])
        if "max_iters" in e:
            opts.max_iters = int(e["max_iters"])
        if "redistance_every" in e:
            opts.redistance_every = int(e["redistance_every"])
        if "band_half_width" in e:
            raw = str(e["band_half_width"]).strip()
            opts.band_half_width = None if raw == "auto" else float(raw)
        if "tol" in e:
            opts.tol = float(e["tol"])
        return opts


def parse_config(text: str) -> RunConfig:
    cfg = RunConfig(text=text)
    sections = {
        "prior": (_PRIOR_KEYS, cfg.prior),
        "likelihood": (_LIK_KEYS, cfg.likelihood),
        "evolve": (_EVOLVE_KEYS, cfg.evolve),
        "io": (_IO_KEYS, cfg.io),
    }
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidConfig(f"line {lineno}: expected `section.key = value`")
        key, value = (part.strip() for part in line.split("=", 1))
        if "." not in key:
            raise InvalidConfig(f"line {lineno}: key {key!r} lacks a section prefix")
        section, name = key.split(".", 1)
        if section not in sections:
            raise InvalidConfig(f"line {lineno}: unknown section {section!r}")
        allowed, store = sections[section]
        if name not in allowed:
            raise InvalidConfig(f"line {lineno}: unknown key {key!r}")
        store[name] = value
    return cfg


def load_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_config(handle.read())


def config_hash(text: str) -> str:
    """Stable short digest of the semantic content (sorted key = value)."""
    cfg = parse_config(text) if text else RunConfig()
    lines = []
    for section_name, store in (
        ("prior", cfg.prior),
        ("likelihood", cfg.likelihood),
        ("evolve", cfg.evolve),
        ("io", cfg.io),
    ):
        for key in sorted(store):
            lines.append(f"{section_name}.{key} = {store[key]}")
    canon = "\n".join(lines)
    return hashlib.sha256(canon.encode()).hexdigest()[:12]
