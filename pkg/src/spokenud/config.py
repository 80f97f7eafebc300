"""Toolkit configuration: one declarative YAML document with all defaults
inline-documented; user files override defaults, CLI flags override both."""

from __future__ import annotations

from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import yaml

from .backends import BackendConfig
from .core import SpokenUdError, UD_RELATIONS, UPOS_TAGS
from .flexud import PenaltySchedule, ToleranceConfig, Weights


class ConfigError(SpokenUdError):
    pass


@dataclass(frozen=True)
class ToolkitConfig:
    weights: Weights
    tolerance: ToleranceConfig
    penalties: PenaltySchedule
    mwe_whitelist: tuple[str, ...]
    allowed_upos: frozenset
    allowed_deprels: frozenset
    backend: BackendConfig
    workers: int = 1
    agent_retries: int = 2

    def with_backend(self, **kwargs) -> "ToolkitConfig":
        return replace(self, backend=replace(self.backend, **kwargs))


def _deep_merge(base: dict, override: dict) -> dict:
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def _default_document() -> dict:
    text = resources.files("spokenud.data").joinpath("default_config.yaml") \
        .read_text("utf-8")
    return yaml.safe_load(text)


def load_config(path: str | Path | None = None) -> ToolkitConfig:
    """Build the toolkit configuration from the shipped defaults, optionally
    merged with a user YAML file of the same structure."""
    document = _default_document()
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file does not exist: {path}")
        user = yaml.safe_load(path.read_text("utf-8")) or {}
        if not isinstance(user, dict):
            raise ConfigError(f"config file must hold a mapping: {path}")
        document = _deep_merge(document, user)
    return _build(document)


def _build(document: dict) -> ToolkitConfig:
    evaluation = document.get("evaluation", {})
    weights_doc = evaluation.get("weights", {})
    try:
        weights = Weights(
            w_split=float(weights_doc.get("split", 0.15)),
            w_id=float(weights_doc.get("id", 0.15)),
            w_upos=float(weights_doc.get("upos", 0.20)),
            w_head=float(weights_doc.get("head", 0.25)),
            w_deprel=float(weights_doc.get("deprel", 0.25)),
        )
    except SpokenUdError as err:
        raise ConfigError(str(err))

    tolerance_doc = evaluation.get("tolerance", {})
    tolerance = ToleranceConfig(
        upos_pairs=frozenset(frozenset(pair)
                             for pair in tolerance_doc.get("upos_pairs", [])),
        deprel_classes=tuple(frozenset(cls)
                             for cls in tolerance_doc.get("deprel_classes", [])),
        upos_credit=float(tolerance_doc.get("upos_credit", 0.8)),
        deprel_credit=float(tolerance_doc.get("deprel_credit", 0.8)),
        contraction_table={str(k): str(v) for k, v in
                           tolerance_doc.get("contractions", {}).items()},
    )

    penalties_doc = evaluation.get("penalties", {})
    try:
        penalties = PenaltySchedule(
            missing_dotted_mwe=float(penalties_doc.get("missing_dotted_mwe", 0.30)),
            reparandum_misattached=float(
                penalties_doc.get("reparandum_misattached", 0.25)),
            invalid_head_persisting=float(
                penalties_doc.get("invalid_head_persisting", 0.40)),
            multiple_roots_or_cycle=float(
                penalties_doc.get("multiple_roots_or_cycle", 0.50)),
            tolerant_upos_substitution=float(
                penalties_doc.get("tolerant_upos_substitution", 0.01)),
            near_miss_deprel=float(penalties_doc.get("near_miss_deprel", 0.01)),
            minor_mismatch=float(penalties_doc.get("minor_mismatch", 0.02)),
            p_max=float(penalties_doc.get("p_max", 0.95)),
        )
    except ValueError as err:
        raise ConfigError(str(err))

    annotation_doc = document.get("annotation", {})
    allowed_upos = frozenset(annotation_doc.get("allowed_upos") or UPOS_TAGS)
    allowed_deprels = frozenset(
        annotation_doc.get("allowed_deprels") or UD_RELATIONS)

    pipeline_doc = document.get("pipeline", {})
    backend_doc = document.get("backend", {})
    backend = BackendConfig(
        mode=backend_doc.get("mode", "stub"),
        base_url=backend_doc.get("base_url", "https://api.openai.com/v1"),
        model_name=backend_doc.get("model_name", "gpt-4.1"),
        temperature=float(backend_doc.get("temperature", 0.0)),
        max_tokens=int(backend_doc.get("max_tokens", 4096)),
        timeout_s=float(backend_doc.get("timeout_s", 60.0)),
        retries=int(backend_doc.get("retries", 2)),
        replay_dir=backend_doc.get("replay_dir"),
        max_in_flight=int(backend_doc.get("max_in_flight", 4)),
        auth_env_var=backend_doc.get("auth_env_var", "SPOKENUD_API_KEY"),
    )

    return ToolkitConfig(
        weights=weights,
        tolerance=tolerance,
        penalties=penalties,
        mwe_whitelist=tuple(pipeline_doc.get("mwe_whitelist", ())),
        allowed_upos=allowed_upos,
        allowed_deprels=allowed_deprels,
        backend=backend,
        workers=int(pipeline_doc.get("workers", 1)),
        agent_retries=int(pipeline_doc.get("agent_retries", 2)),
    )
