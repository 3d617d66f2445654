import pytest

from burgerslie.prolong import parse_vector_field

X = parse_vector_field("1; 0; 0")
T = parse_vector_field("0; 1; 0")
B11 = parse_vector_field("t*x; t^2; x - t*u")
B12 = parse_vector_field("t; 0; 1")
B13 = parse_vector_field("x; 2*t; -u")


@pytest.fixture
def burgers_basis():
    return [X, T, B11, B12, B13]
