from __future__ import annotations
import uuid
from pydantic.typing import List, Union
from qkd_ike.utils import get_logger


LOGGER = get_logger(name="QkdIke-Validators")


def validate_unique(values: list):
    values_set = set(values)
    if len(values) != len(values_set):
        msg = f"Duplicate values found in: {values}"
        LOGGER.error(msg=msg)
        raise AssertionError(msg)
    return values


def required_together(values: dict, required: List[str]) -> dict:
    for req in required:
        others = list(required)
        others.remove(req)
        if values.get(req) is not None:
            for other in others:
                if values.get(other) is None:
                    msg = f"RequiredTogether: {required}. Got '{req}' but '{other}' is None"
                    LOGGER.error(msg)
                    raise AssertionError(msg)
    return values


def validate_fields_unique(obj_list: list, fields: Union[str, List[str]]) -> list:
    """
    This validator takes in a list of models and checks that the fields are not duplicate.
    Typical use case is verifying that keys in a container have different key IDs.
    Args:
        obj_list: List of models
        fields: names of fields to check for duplicates

    Returns: The original list of models or raises Assertion Error

    """
    duplicate_fields = []
    if not isinstance(fields, list):
        fields = [fields]
    model_types = [x.__class__.__name__ for x in obj_list]
    for field in fields:
        field_list = [getattr(x, field) for x in obj_list]
        if len(set(field_list)) != len(field_list):
            duplicate_fields.append(field)
    if len(duplicate_fields) == 0:
        return obj_list
    msg = f"Given models ({set(model_types)}) contain duplicate values for the following fields: {duplicate_fields}."
    LOGGER.error(msg=msg)
    raise AssertionError(msg)


def validate_multiple_of(value: int, base: int, name: str = "value") -> int:
    if value % base != 0:
        msg = f"'{name}' must be a multiple of {base}, got {value}."
        LOGGER.error(msg=msg)
        raise ValueError(msg)
    return value


def validate_key_ids_octets(data: bytes) -> List[uuid.UUID]:
    """
    Splits concatenated raw 16-byte key IDs.

    Args:
        data: Notify data carrying the IDs

    Returns: Ordered list of UUIDs

    """
    validate_multiple_of(value=len(data), base=16, name="key_ids length")
    return [uuid.UUID(bytes=bytes(data[i:i + 16])) for i in range(0, len(data), 16)]


def validate_subset(values: list, allowed: list, name: str = "values") -> list:
    unknown = [x for x in values if x not in allowed]
    if unknown:
        msg = f"Invalid {name}: {unknown}. Allowed: {allowed}"
        LOGGER.error(msg=msg)
        raise AssertionError(msg)
    return values
