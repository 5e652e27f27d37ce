from .semantics import (
    CompiledModel,
    ModelRuntimeError,
    compiled,
    initial_state,
    is_accepting,
    property_relevance,
    successors,
)
from .syntax import (
    E_DUPLICATE,
    E_PROPERTY,
    E_SYNTAX,
    E_TYPE,
    E_UNKNOWN,
    Model,
    ModelParseError,
    parse_model,
)

__all__ = [
    "CompiledModel", "ModelRuntimeError", "compiled", "initial_state", "is_accepting",
    "property_relevance", "successors", "E_DUPLICATE", "E_PROPERTY", "E_SYNTAX", "E_TYPE",
    "E_UNKNOWN", "Model", "ModelParseError", "parse_model",
]
