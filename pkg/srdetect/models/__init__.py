from srdetect.core.config import ConfigError
from srdetect.models.base import (
    ChangeModel,
    Hypothesis,
    kernel_post,
    kernel_pre,
    sample_observation,
)
from srdetect.models.exponential import ExponentialModel, exponential_model
from srdetect.models.gaussian import GaussianModel, gaussian_model

_registry: dict[str, type[ChangeModel]] = {}


def register_model(model_cls: type[ChangeModel]) -> type[ChangeModel]:
    """Register a model class under its ``name``. Idempotent for the same class."""
    name = model_cls.name
    if name in _registry:
        if _registry[name] is model_cls:
            return model_cls
        raise ValueError(f"Model '{name}' already registered with a different class")
    _registry[name] = model_cls
    return model_cls


def available_models() -> list[str]:
    return sorted(_registry)


def model_config_problems(section: dict) -> list[str]:
    """Validate a ``model`` config section against the registered class."""
    name = section.get("name")
    if name is None:
        return ["model: missing required key(s): name"]
    model_cls = _registry.get(name)
    if model_cls is None:
        return [
            f"model.name: unknown model '{name}' "
            f"(available: {', '.join(available_models())})"
        ]
    return model_cls.config_problems(section)


def build_model(section: dict) -> ChangeModel:
    """Instantiate the model a config section describes.

    Raises:
        ConfigError: listing every problem with the section.
    """
    problems = model_config_problems(section)
    if problems:
        raise ConfigError("Invalid model config:\n  " + "\n  ".join(problems))
    return _registry[section["name"]].from_config(section)


def clear_registry() -> None:
    """Clear all registered models. For testing."""
    _registry.clear()


def register_builtin_models() -> None:
    register_model(ExponentialModel)
    register_model(GaussianModel)


register_builtin_models()

__all__ = [
    "ChangeModel",
    "ExponentialModel",
    "GaussianModel",
    "Hypothesis",
    "available_models",
    "build_model",
    "clear_registry",
    "exponential_model",
    "gaussian_model",
    "kernel_post",
    "kernel_pre",
    "model_config_problems",
    "register_builtin_models",
    "register_model",
    "sample_observation",
]
