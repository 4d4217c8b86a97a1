import json

import numpy as np
import pytest

from opframe.errors import ParseError
from opframe.frames import lift_from_controlled_k_frame
from opframe.lab import GenSpec, generate
from opframe.module import random_vector
from opframe.serialize import (
    decode_matrix,
    decode_system,
    decode_vector,
    dumps,
    encode_matrix,
    encode_system,
    encode_value,
    encode_vector,
    loads_operator,
    loads_system,
)


def test_matrix_round_trip_is_bit_exact():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((3, 3)) * 1e-300 + 1j * rng.standard_normal((3, 3)) * 1e300
    b = decode_matrix(json.loads(json.dumps(encode_matrix(a))))
    assert np.array_equal(a.view(np.uint64), b.view(np.uint64))


def test_vector_round_trip():
    x = random_vector(2, 3, 1)
    assert decode_vector(json.loads(json.dumps(encode_vector(x)))) == x


@pytest.mark.parametrize("mode", ["general", "commuting_diagonal", "parseval", "tight", "rank_deficient_K"])
def test_system_round_trip(mode):
    sys = generate(GenSpec(2, 2, 3, mode, seed=5))
    text = dumps(encode_system(sys))
    back, vecs = loads_system(text)
    assert back == sys and vecs is None
    assert dumps(encode_system(back)) == text


@pytest.mark.parametrize("doc, where", [
    ("[1,2]", "instance"),
    ('{"version": 2}', "version"),
    ('{"version": 1, "n": 1, "d": 1, "family": []}', "family"),
    ('{"version": 1, "n": 1, "d": 1, "family": [{"n": 1, "d": 1, "rep": [[[1, "x"]]]}]}', "family[0].rep[0][0][1]"),
    ('{"version": 1, "n": 1, "d": 1, "family": [{"n": 1, "d": 1, "rep": [[[1, 0], [2, 0]]]}]}', "family[0].rep"),
    ('{"version": 1, "n": 1, "d": 2, "family": [{"n": 1, "d": 1, "rep": [[[1, 0]]]}]}', "family[0]"),
    ('{"version": 1, "n": 1, "d": 1, "family": [{"n": 1, "d": 1, "rep": [[[1, 0]]]}]}', "C"),
    ('{"version": 1, "n": 1, "d": 1, "family": [{"n": 1, "d": 1, "rep": [[[1, 0]]]}],'
     ' "C": {"n": 1, "d": 1, "rep": [[[-1, 0]]]}, "Cprime": {"n": 1, "d": 1, "rep": [[[1, 0]]]},'
     ' "K": {"n": 1, "d": 1, "rep": [[[1, 0]]]}}', "C"),
    ("not json", "invalid JSON"),
])
def test_parse_errors_are_positional(doc, where):
    with pytest.raises(ParseError) as err:
        loads_system(doc)
    assert where in str(err.value)


def test_operator_parse_errors():
    with pytest.raises(ParseError):
        loads_operator('{"n": 1, "d": 1}')
    with pytest.raises(ParseError):
        loads_operator('{"n": true, "d": 1, "rep": [[[1, 0]]]}')


def test_non_finite_rejected():
    with pytest.raises(ParseError):
        decode_matrix([[[float("nan"), 0]]])


def test_encode_value_inf():
    assert encode_value(float("inf")) == "inf"
    assert encode_value({"a": [np.float64(1.5), np.bool_(True)]}) == {"a": [1.5, True]}
    assert json.loads(dumps({"x": encode_value(float("inf"))})) == {"x": "inf"}


def test_vectors_travel_with_system():
    inst = generate(GenSpec(1, 3, 2, "controlled_k_vector_frame", seed=1))
    sys = lift_from_controlled_k_frame(inst.vectors, inst.C, inst.K)
    back, vecs = decode_system(json.loads(dumps(encode_system(sys, inst.vectors))))
    assert back == sys and all(a == b for a, b in zip(vecs, inst.vectors))
