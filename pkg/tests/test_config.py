import pytest
from pydantic import ValidationError

from hereditary.config import LOG_LEVELS, Settings


def test_log_level_is_upper_cased():
    assert Settings(LOG_LEVEL=" warning").LOG_LEVEL == "WARNING"


def test_unknown_log_level_rejected():
    with pytest.raises(ValidationError, match="LOG_LEVEL"):
        Settings(LOG_LEVEL="VERBOSE")


def test_settings_carry_no_debug_switch():
    assert "DEBUG" not in Settings.model_fields
    assert "DEBUG" in LOG_LEVELS


@pytest.mark.parametrize("field,value", [
    ("DEFAULT_GRID_INTERVALS", 201),
    ("DEFAULT_QUADRATURE", "gauss"),
    ("SAMPLING_WORKERS", 0),
    ("JACOBI_MAX_SWEEPS", 0),
])
def test_bad_values_rejected(field, value):
    with pytest.raises(ValidationError, match=field):
        Settings(**{field: value})
