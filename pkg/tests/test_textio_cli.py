from __future__ import annotations

from fractions import Fraction

import pytest

from predim import (
    FinStructure,
    MuFunction,
    ParseError,
    Signature,
    canonical_code,
    classify_extension,
    parse_map,
    parse_mu,
    parse_spec,
    parse_structure,
    report_text,
    serialize_map,
    serialize_mu,
    serialize_spec,
    serialize_structure,
)
from predim.cli import main

from conftest import graph, spec_alpha, spec_fusion, vectors

F = Fraction

K3_TEXT = """\
universe 3
rel E 2 1/1
tup E 0 1
tup E 1 2
tup E 0 2
"""

ALPHA_SPEC = "component relational on\n"
FUSION_SPEC = """\
component relational off
component matroid linear5 1/1
component matroid free 1/1
component matroid cardinality -1/1
"""


def test_structure_roundtrip():
    g = graph(4, [(0, 1), (1, 2)], weight=F(2, 3))
    again = parse_structure(serialize_structure(g))
    assert again == g
    v = vectors((1, 0), (0, 1))
    assert parse_structure(serialize_structure(v)) == v


def test_structure_parse_frozen_example():
    k3 = parse_structure(K3_TEXT)
    assert k3 == graph(3, [(0, 1), (1, 2), (0, 2)])


def test_structure_serializer_renumbers():
    g = graph(3, [(0, 1), (1, 2)]).relabel({0: 10, 1: 20, 2: 30})
    assert parse_structure(serialize_structure(g)) == graph(3, [(0, 1), (1, 2)])


def test_structure_serializer_refuses_ordered():
    sig = Signature((("R", 2),), ordered=True)
    s = FinStructure(sig, (0, 1), {"R": [(1, 0)]})
    with pytest.raises(Exception):
        serialize_structure(s)


def test_structure_parse_errors_carry_line_numbers():
    bad = "universe 2\nrel E 2 1/1\ntup E 0 5\n"
    with pytest.raises(ParseError) as info:
        parse_structure(bad)
    assert "out-of-range" in str(info.value)
    with pytest.raises(ParseError) as info:
        parse_structure("universe 1\nuniverse 2\n")
    assert "line 2" in str(info.value)
    with pytest.raises(ParseError):
        parse_structure("rel E 2 1/1\n")  # no universe
    with pytest.raises(ParseError):
        parse_structure("universe 2\ntup E 0 1\n")  # undeclared symbol
    with pytest.raises(ParseError):
        parse_structure("universe 2\nrel E 2 0/1\n")  # nonpositive weight
    with pytest.raises(ParseError):
        parse_structure("universe 2\nwhatever\n")


def test_comments_and_blank_lines_ignored():
    text = "# a comment\n\nuniverse 2\nrel E 2 1/1\n  # indented comment\ntup E 0 1\n"
    assert parse_structure(text) == graph(2, [(0, 1)])


def test_spec_roundtrip_and_errors():
    spec = parse_spec(FUSION_SPEC)
    assert spec == spec_fusion()
    assert parse_spec(serialize_spec(spec)) == spec
    assert parse_spec(ALPHA_SPEC) == spec_alpha()
    with pytest.raises(ParseError):
        parse_spec("component matroid free 1/1\n")  # missing relational line
    with pytest.raises(ParseError):
        parse_spec("component relational maybe\n")
    with pytest.raises(ParseError):
        parse_spec("component relational on\ncomponent matroid linear9 1/1\n")
    # invalid combinations parse only when explicitly allowed
    from predim import SpecError

    bent = "component relational on\ncomponent matroid uniform2 -1/1\n"
    with pytest.raises(SpecError):
        parse_spec(bent)
    spec = parse_spec(bent, allow_invalid=True)
    assert not spec.valid


def test_mu_roundtrip_and_errors():
    mu = MuFunction.from_dict({b"ab": 3}, formula="linear", params=(2, 1))
    again = parse_mu(serialize_mu(mu))
    assert again == mu
    with pytest.raises(ParseError):
        parse_mu("mu zz 3\n")  # bad hex
    with pytest.raises(ParseError):
        parse_mu("mu 6162 0\n")  # zero cap
    with pytest.raises(ParseError):
        parse_mu("mu-default nope\n")


def test_map_roundtrip_and_errors():
    m = {3: 7, 1: 2}
    assert parse_map(serialize_map(m)) == m
    with pytest.raises(ParseError):
        parse_map("1 2 3\n")
    with pytest.raises(ParseError):
        parse_map("1 2\n1 5\n")


def test_report_text_format():
    out = report_text({"b": F(1, 2), "a": True, "c": 7})
    assert out == "a\ttrue\nb\t1/2\nc\t7\n"


# -- command-line driver ----------------------------------------------------


@pytest.fixture
def files(tmp_path):
    k3 = tmp_path / "k3.structure"
    k3.write_text(K3_TEXT)
    k4 = tmp_path / "k4.structure"
    k4.write_text(serialize_structure(graph(4, [(a, b) for a in range(4) for b in range(a + 1, 4)])))
    spec = tmp_path / "alpha.spec"
    spec.write_text(ALPHA_SPEC)
    fusion = tmp_path / "fusion.spec"
    fusion.write_text(FUSION_SPEC)
    return tmp_path


def test_cli_delta(files, capsys):
    assert main(["delta", "--spec", str(files / "alpha.spec"), str(files / "k3.structure")]) == 0
    assert capsys.readouterr().out == "0/1\n"


def test_cli_delta_subset(files, capsys):
    rc = main(
        ["delta", "--spec", str(files / "alpha.spec"), "--subset", "0,1", str(files / "k3.structure")]
    )
    assert rc == 0
    assert capsys.readouterr().out == "1/1\n"


def test_cli_strong_and_closure(files, capsys):
    rc = main(
        ["strong", "--spec", str(files / "alpha.spec"), "--base", "0", str(files / "k4.structure")]
    )
    out = capsys.readouterr().out
    assert rc == 1
    assert "verdict\tfalse" in out
    assert "deficiency\t-3/1" in out
    assert "witness\t[1 2 3]" in out
    rc = main(
        ["closure", "--spec", str(files / "alpha.spec"), "--base", "0", str(files / "k4.structure")]
    )
    out = capsys.readouterr().out
    assert rc == 0
    assert "closure\t[0 1 2 3]" in out


def test_cli_check_class(files, capsys):
    assert main(["check-class", "--spec", str(files / "alpha.spec"), str(files / "k3.structure")]) == 0
    out = capsys.readouterr().out
    assert "in-class\ttrue" in out
    assert main(["check-class", "--spec", str(files / "alpha.spec"), str(files / "k4.structure")]) == 1
    out = capsys.readouterr().out
    assert "in-class\tfalse" in out
    assert "witness\t[0 1 2 3]" in out


def test_cli_structure_output_embeds_report(files, capsys):
    rc = main(
        [
            "build",
            "--spec",
            str(files / "alpha.spec"),
            "--k",
            "2",
            "--budget",
            "20",
        ]
    )
    assert rc == 0
    out = capsys.readouterr().out
    # report rides along as comments, so the stream still parses
    built = parse_structure(out)
    assert built.n == 4
    assert "# fraction\t1/1" in out


def test_cli_build_out_file(files, tmp_path, capsys):
    dest = tmp_path / "out.structure"
    rc = main(
        [
            "build",
            "--spec",
            str(files / "alpha.spec"),
            "--k",
            "2",
            "--budget",
            "20",
            "--out",
            str(dest),
        ]
    )
    assert rc == 0
    report = capsys.readouterr().out
    assert "fraction\t1/1" in report
    assert "#" not in report
    assert parse_structure(dest.read_text()).n == 4


def test_cli_audit(files, capsys):
    rc = main(
        [
            "audit",
            "--spec",
            str(files / "alpha.spec"),
            "--k",
            "2",
            str(files / "k3.structure"),
        ]
    )
    assert rc == 1  # triangle alone misses most level-2 obligations
    out = capsys.readouterr().out
    assert "satisfied" in out and "unmet.00000" in out


def test_cli_amalgamate(files, tmp_path, capsys):
    base = tmp_path / "base.structure"
    base.write_text("universe 1\nrel E 2 1/1\n")
    pend = tmp_path / "pend.structure"
    pend.write_text("universe 2\nrel E 2 1/1\ntup E 0 1\n")
    lmap = tmp_path / "l.map"
    lmap.write_text("0 0\n")
    rc = main(
        [
            "amalgamate",
            str(base),
            str(pend),
            str(pend),
            "--left-map",
            str(lmap),
            "--right-map",
            str(lmap),
        ]
    )
    assert rc == 0
    out = capsys.readouterr().out
    star = parse_structure(out)
    assert star.n == 3
    assert star.count("E") == 2
    assert "# map.right.00001\t2" in out


def test_cli_check_mu(files, tmp_path, capsys):
    spec = spec_alpha()
    pend_code = classify_extension(spec, graph(2, [(0, 1)]), [0]).code
    mu = tmp_path / "tight.mu"
    mu.write_text(f"mu-default linear 8 4\nmu {pend_code.hex()} 2\n")
    star = tmp_path / "star.structure"
    star.write_text(serialize_structure(graph(4, [(0, 1), (0, 2), (0, 3)])))
    rc = main(
        [
            "check-mu",
            "--spec",
            str(files / "alpha.spec"),
            "--mu",
            str(mu),
            "--bound",
            "2",
            str(star),
        ]
    )
    assert rc == 1
    out = capsys.readouterr().out
    assert "ok\tfalse" in out
    assert "violation.00000\t[0]" in out
    # K4 is outside the class: precondition failure, not a violation
    rc = main(
        [
            "check-mu",
            "--spec",
            str(files / "alpha.spec"),
            "--mu",
            str(mu),
            "--bound",
            "2",
            str(files / "k4.structure"),
        ]
    )
    assert rc == 2


def test_cli_count_copies(files, tmp_path, capsys):
    star = tmp_path / "star.structure"
    star.write_text(serialize_structure(graph(4, [(0, 1), (0, 2), (0, 3)])))
    ext = tmp_path / "pend.structure"
    ext.write_text("universe 2\nrel E 2 1/1\ntup E 0 1\n")
    rc = main(
        [
            "count-copies",
            "--spec",
            str(files / "alpha.spec"),
            "--base",
            "0",
            "--ext",
            str(ext),
            str(star),
        ]
    )
    assert rc == 0
    assert "count\t3" in capsys.readouterr().out


def test_cli_exit_codes_for_bad_input(files, tmp_path, capsys):
    # missing file
    assert main(["delta", "--spec", str(files / "alpha.spec"), str(tmp_path / "nope")]) == 2
    capsys.readouterr()
    # unparseable structure
    bad = tmp_path / "bad.structure"
    bad.write_text("universe x\n")
    assert main(["delta", "--spec", str(files / "alpha.spec"), str(bad)]) == 2
    err = capsys.readouterr().err
    assert "bad.structure" in err
    # bad ids
    assert (
        main(["delta", "--spec", str(files / "alpha.spec"), "--subset", "0,9", str(files / "k3.structure")])
        == 2
    )
    capsys.readouterr()
    # usage errors from argparse
    with pytest.raises(SystemExit) as info:
        main(["delta"])
    assert info.value.code == 2
    capsys.readouterr()


def test_cli_invalid_spec_guard(files, tmp_path, capsys):
    bent = tmp_path / "bent.spec"
    bent.write_text("component relational on\ncomponent matroid uniform2 -1/1\n")
    assert main(["delta", "--spec", str(bent), str(files / "k3.structure")]) == 2
    capsys.readouterr()
    # audit-all accepts it and reports the submodularity break
    rc = main(
        [
            "audit-all",
            "--spec",
            str(bent),
            "--samples",
            "200",
            "--seed",
            "3",
        ]
    )
    assert rc == 1
    out = capsys.readouterr().out
    assert "audit.submodularity.violations" in out
    assert "audit.strong-laws.note\tskipped: spec not submodular" in out


def test_cli_audit_all_clean(files, capsys):
    rc = main(["audit-all", "--spec", str(files / "alpha.spec"), "--samples", "60", "--seed", "1"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "ok\ttrue" in out
    assert "audit.submodularity.checked\t60" in out


def test_cli_audit_all_zero_samples_warns(files, capsys):
    rc = main(["audit-all", "--spec", str(files / "alpha.spec"), "--samples", "0"])
    assert rc == 0
    captured = capsys.readouterr()
    assert "vacuous\ttrue" in captured.out
    assert "vacuous" in captured.err


def test_cli_threads_do_not_change_output(files, capsys, monkeypatch):
    argv = ["audit-all", "--spec", str(files / "alpha.spec"), "--samples", "80", "--seed", "7"]
    assert main(argv + ["--threads", "1"]) == 0
    one = capsys.readouterr().out
    assert main(argv + ["--threads", "4"]) == 0
    four = capsys.readouterr().out
    assert one == four
    monkeypatch.setenv("PREDIM_THREADS", "8")
    assert main(argv) == 0
    assert capsys.readouterr().out == one


def test_cli_gcl_and_dim(files, capsys):
    rc = main(
        ["dim", "--spec", str(files / "alpha.spec"), "--of", "0", str(files / "k3.structure")]
    )
    assert rc == 0
    assert "dim\t0" in capsys.readouterr().out
    rc = main(
        ["gcl", "--spec", str(files / "alpha.spec"), "--of", "0", str(files / "k3.structure")]
    )
    assert rc == 0
    assert "gcl\t[0 1 2]" in capsys.readouterr().out


def test_cli_enumerate_min(files, tmp_path, capsys):
    point = tmp_path / "point.structure"
    point.write_text("universe 1\nrel E 2 1/1\n")
    outdir = tmp_path / "classes"
    rc = main(
        [
            "enumerate-min",
            "--spec",
            str(files / "alpha.spec"),
            "--max-new",
            "2",
            "--biminimal",
            "--out-dir",
            str(outdir),
            str(point),
        ]
    )
    assert rc == 0
    out = capsys.readouterr().out
    assert "classes\t1" in out
    ext = parse_structure((outdir / "class00000.ext").read_text())
    assert ext.n == 2 and ext.count("E") == 1


def test_cli_collapse_build_and_roundtrip(files, tmp_path, capsys):
    spec = spec_alpha()
    pend_code = classify_extension(spec, graph(2, [(0, 1)]), [0]).code
    mu = tmp_path / "mu3.mu"
    mu.write_text(f"mu-default linear 8 4\nmu {pend_code.hex()} 3\n")
    start = tmp_path / "edge.structure"
    start.write_text("universe 2\nrel E 2 1/1\ntup E 0 1\n")
    dest = tmp_path / "collapsed.structure"
    rc = main(
        [
            "collapse-build",
            "--spec",
            str(files / "alpha.spec"),
            "--mu",
            str(mu),
            "--start",
            str(start),
            "--k",
            "2",
            "--budget",
            "14",
            "--bound",
            "2",
            "--cross-check",
            "--out",
            str(dest),
        ]
    )
    assert rc == 0
    report = capsys.readouterr().out
    assert "mu-ok\ttrue" in report
    built = parse_structure(dest.read_text())
    # serialization canonicalizes ids but preserves the structure
    assert canonical_code(parse_structure(serialize_structure(built))) == canonical_code(built)
