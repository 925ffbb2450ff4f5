import pytest

from nonaccretive.config import ConfigError, load_config, parse_config

BASE = """\
[problem]
dim = 1
V = "-x1^2 + i*x1^3"
box = 10
n = 400
"""


def test_minimal_config_defaults():
    cfg = parse_config(BASE)
    assert cfg.dim == 1 and cfg.lower == [-10] and cfg.upper == [10] and cfg.n == [400]
    assert cfg.shifts == [0j] and cfg.eps == 0.1 and cfg.seed == 0
    assert cfg.gamma1 == [2**k / 16 for k in range(9)] and cfg.gamma2_cap == 20
    assert cfg.deltas == [0.1, 1.0, 10.0]


def test_full_config():
    text = """\
[problem]
dim = 2
V = "x1^2 + x2^2"
A = "-x2/2", "x1/2"
lower = -3, -2
upper = 3, 2
h = 0.1
scheme = gauge_covariant

[solver]
shifts = 0, 2+1i, -1i
k = 5
m = 30
richardson = yes

[certificate]
fixed_gamma1 = 1
fixed_gamma2 = 0.5

[agmon]
x0 = 0.5, 0

[verify]
mu = 1-2i
deltas = 0.5, 2

[run]
seed = 11
"""
    cfg = parse_config(text)
    assert cfg.A == ["-x2/2", "x1/2"]
    assert cfg.n == [59, 39]
    assert cfg.shifts == [0j, 2 + 1j, -1j]
    assert cfg.richardson and cfg.m == 30
    assert (cfg.fixed_gamma1, cfg.fixed_gamma2) == (1.0, 0.5)
    assert cfg.mu == 1 - 2j and cfg.seed == 11 and cfg.x0 == [0.5, 0.0]
    assert len(cfg.sha256) == 64 and "text" not in cfg.echo()


@pytest.mark.parametrize("extra,line,fragment", [
    ("[solver]\nk = -2\n", 8, "positive"),
    ("[solver]\nbogus = 1\n", 8, "unknown key"),
    ("[nonsense]\n", 7, "unknown section"),
    ("[truncation]\nradii = 8, 6, 10\n", 8, "increasing"),
    ("[agmon]\neps = 1.5\n", 8, "eps"),
    # the missing partner has no line of its own, so the section header is named
    ("[certificate]\nfixed_gamma1 = 1\n", 7, "go together"),
])
def test_errors_carry_line_numbers(extra, line, fragment):
    with pytest.raises(ConfigError) as err:
        parse_config(BASE + "\n" + extra, "case.ini")
    assert err.value.line == line
    assert f"case.ini:{line}:" in str(err.value) and fragment in str(err.value)


def test_bad_expression_points_at_its_line():
    text = BASE.replace('"-x1^2 + i*x1^3"', '"x1^ + 2"')
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    assert err.value.line == 3 and "position" in str(err.value)


def test_variable_beyond_dimension():
    with pytest.raises(ConfigError, match="x2"):
        parse_config(BASE.replace("x1^3", "x2^3"))


def test_missing_grid_and_box():
    with pytest.raises(ConfigError, match="'n'"):
        parse_config(BASE.replace("n = 400\n", ""))
    with pytest.raises(ConfigError, match="box"):
        parse_config(BASE.replace("box = 10\n", ""))


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "absent.ini")
