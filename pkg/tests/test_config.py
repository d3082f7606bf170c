import json

import pytest

from fvlinf.bfunctions import SCHARFETTER_GUMMEL_B, UPWIND_B
from fvlinf.config import ConfigError, RunConfig


def test_defaults():
    cfg = RunConfig.default()
    assert cfg["scheme"]["kind"] == "upwind" and cfg["degiorgi"]["seed"] == 42
    assert cfg["degiorgi"]["m_max"] == 12 and cfg["calibrate"]["studies"] == ["random-compliant"]
    assert cfg.b_function() is UPWIND_B


def test_ini_parsing():
    cfg = RunConfig.from_text("""
[mesh]
nx = 8   # inline comment
rect = 0, 2, 0, 1
dirichlet = west, east
[scheme]
kind = scharfetter_gummel
[degiorgi]
poincare_C = 3.5
refinements = 8x8, 16, 32x16
[output]
dump_system = yes
""")
    assert cfg["mesh"]["nx"] == 8 and cfg["mesh"]["rect"] == [0.0, 2.0, 0.0, 1.0]
    assert cfg["mesh"]["dirichlet"] == ["west", "east"]
    assert cfg["degiorgi"]["poincare_C"] == 3.5
    assert cfg["degiorgi"]["refinements"] == [[8, 8], [16, 16], [32, 16]]
    assert cfg["output"]["dump_system"] is True
    assert cfg.b_function() is SCHARFETTER_GUMMEL_B


@pytest.mark.parametrize("text, fragment", [
    ("[mesh]\nnz = 3\n", "unknown key"),
    ("[meshes]\nnx = 3\n", "unknown section"),
    ("[mesh]\nnx = three\n", "nx"),
    ("[mesh]\nnx = 0\n", "nx must be"),
    ("[mesh]\nrect = 1, 0, 0, 1\n", "rect"),
    ("[mesh]\ndirichlet = up\n", "dirichlet"),
    ("[scheme]\nkind = bogus\n", "kind"),
    ("[scheme]\nkind = custom\n", "hook"),
    ("[scheme]\nhook = upwind\n", "hook"),
    ("[problem]\npreset = nope\n", "preset"),
    ("[problem]\npreset = laplace-linear\nsource = 1\n", "not both"),
    ("[solver]\ntol = 0\n", "tol"),
    ("[degiorgi]\nseed = -1\n", "seed"),
    ("[degiorgi]\nboundM_C = 0\n", "boundM_C"),
    ("[degiorgi]\nrefinements = 0x4\n", "refinements"),
    ("[degiorgi]\nrefinements = 4x4\n[mesh]\nfile = m.txt\n", "generated mesh"),
    ("[calibrate]\nstudies =\n", "must not be empty"),
    ("[calibrate]\nstudies = nothing\n", "unknown study"),
    ("[calibrate]\nm_max = 1\n", "m_max"),
    ("[output]\ndump_system = maybe\n", "boolean"),
    ("not an ini file", "cannot parse"),
    ("{not json", "invalid JSON"),
])
def test_rejections(text, fragment):
    with pytest.raises(ConfigError, match=fragment):
        RunConfig.from_text(text)


def test_keys_are_case_sensitive():
    with pytest.raises(ConfigError, match="unknown key"):
        RunConfig.from_text("[degiorgi]\npoincare_c = 2\n")


def test_custom_hook():
    cfg = RunConfig.from_text("[scheme]\nkind = custom\nhook = scharfetter_gummel\n")
    assert cfg.b_function() is SCHARFETTER_GUMMEL_B
    cfg = RunConfig.from_text("[scheme]\nkind = custom\nhook = fvlinf.bfunctions:bernoulli\n")
    assert cfg.b_function().label == "fvlinf.bfunctions:bernoulli"
    with pytest.raises(ConfigError, match="cannot load hook"):
        RunConfig.from_text("[scheme]\nkind = custom\nhook = fvlinf.nowhere:f\n").b_function()
    with pytest.raises(ConfigError):
        RunConfig.from_text("[scheme]\nkind = custom\nhook = nonsense\n").b_function()


def test_round_trips():
    cfg = RunConfig.from_text("[problem]\nvelocity_x = 2*y - 1\nsource = 1\n[degiorgi]\nrefinements = 8x8, 16x16\n"
                              "eta = 0.3\n")
    assert RunConfig.from_text(cfg.to_ini()).values == cfg.values
    assert RunConfig.from_text(json.dumps(cfg.to_dict())).values == cfg.values
    manifest = json.dumps({"command": "verify", "config": cfg.to_dict(), "seed": 42})
    assert RunConfig.from_text(manifest).values == cfg.values


def test_overrides():
    cfg = RunConfig.default()
    assert cfg.with_seed(7)["degiorgi"]["seed"] == 7 and cfg["degiorgi"]["seed"] == 42
    assert cfg.with_seed(None) is cfg
    assert cfg.with_output("x/y")["output"]["dir"] == "x/y"
    with pytest.raises(ConfigError):
        cfg.with_seed(2 ** 64)
