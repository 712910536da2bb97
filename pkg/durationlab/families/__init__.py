"""Dynamic loader for parametric duration families."""

import importlib
import pkgutil
from dataclasses import dataclass
from typing import Any, Callable, Dict

from ..console import Console
from ..errors import InvalidArgumentError

console = Console("FAMILIES")
PACKAGE_NAME = __name__
IGNORE_MODULES = {"__init__", "guard"}


@dataclass(frozen=True)
class Family:
    """Everything the estimators need to know about one family.

    Attributes:
        name: Registry key ("weibull", "qexp").
        param_names: Natural parameter names, in theta order.
        pdf: Validated numpy density pdf(tau, params).
        log_pdf: torch log-density over unconstrained theta.
        to_params: theta -> params dataclass.
        from_params: params dataclass -> theta.
        initial_guesses: (tau, weights, n_perturbed) -> list of theta starts.
    """

    name: str
    param_names: tuple[str, ...]
    pdf: Callable[..., Any]
    log_pdf: Callable[..., Any]
    to_params: Callable[..., Any]
    from_params: Callable[..., Any]
    initial_guesses: Callable[..., Any]

    def density(self, params: Any) -> Callable[[Any], Any]:
        """Bind parameters, returning tau -> density."""
        return lambda tau: self.pdf(tau, params)


def load_families() -> Dict[str, Family]:
    """Load all duration families from submodules.

    A module is a family when it defines FAMILY_NAME and exposes a
    ``<name>_pdf`` density next to the torch ``log_pdf`` and parameter
    converters.

    Returns:
        Dictionary mapping family names to Family records.
    """
    family_dict: Dict[str, Family] = {}

    package = importlib.import_module(PACKAGE_NAME)

    for _, module_name, _ in pkgutil.iter_modules(package.__path__):
        if module_name in IGNORE_MODULES:
            continue

        full_module_name = f"{PACKAGE_NAME}.{module_name}"
        module = importlib.import_module(full_module_name)

        if not hasattr(module, "FAMILY_NAME"):
            console.debug(f"{full_module_name} has no FAMILY_NAME -> skipped")
            continue

        name = getattr(module, "FAMILY_NAME")
        pdf = getattr(module, f"{name}_pdf", None)
        if pdf is None:
            console.debug(f"{full_module_name} has no {name}_pdf -> skipped")
            continue

        family_dict[name] = Family(
            name=name,
            param_names=tuple(getattr(module, "PARAM_NAMES")),
            pdf=pdf,
            log_pdf=getattr(module, "log_pdf"),
            to_params=getattr(module, "to_params"),
            from_params=getattr(module, "from_params"),
            initial_guesses=getattr(module, "initial_guesses"),
        )

        console.debug(f"Loaded family: {name} ({full_module_name})")

    return family_dict


FAMILY_DICT = load_families()


def get_family(name: str) -> Family:
    try:
        return FAMILY_DICT[name]
    except KeyError:
        raise InvalidArgumentError(f"Unknown family '{name}'; available: {sorted(FAMILY_DICT)}") from None
