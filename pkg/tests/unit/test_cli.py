"""
Tests for the lambda-forge command-line interface.
"""

import json

import pytest

from lambda_forge.cli import main


def run(capsys, *args):
    """Run the CLI and return (exit code, stdout, stderr)."""
    code = main(list(args))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestBasicCommands:
    """ope, nf and check."""

    def test_version(self, capsys):
        """--version exits cleanly."""
        code, out, _ = run(capsys, "--version")
        assert code == 0
        assert "lambda-forge" in out

    def test_ope_virasoro(self, capsys):
        """[L lam L] has a cubic central term."""
        code, out, _ = run(capsys, "ope", "L", "L", "--builtin", "virasoro")
        assert code == 0
        assert "lam^3" in out

    def test_ope_from_file(self, capsys, samples_dir):
        """Spec files work in place of built-ins."""
        code, out, _ = run(capsys, "ope", "L", "L", str(samples_dir / "virasoro.lca"))
        assert code == 0
        assert "lam^3" in out

    def test_check_machine(self, capsys):
        """--machine prints one JSON document with the reports."""
        code, out, _ = run(capsys, "--machine", "check", "--builtin", "cur-sl2")
        assert code == 0
        payload = json.loads(out)
        assert payload["success"] is True
        assert payload["passed"] is True
        assert payload["format"] == "lambda-forge"
        assert payload["command"] == "check"
        assert all(r["passed"] for r in payload["reports"])

    def test_check_liealg(self, capsys, samples_dir):
        """A [liealg] file is checked structurally."""
        code, _, _ = run(capsys, "check", str(samples_dir / "sl3.liealg"))
        assert code == 0

    def test_nf_with_assignment(self, capsys):
        """--set specializes parameters in the output."""
        code, out, _ = run(capsys, "--set", "k=3", "nf", "h", "--builtin", "cur-sl2")
        assert code == 0
        assert out.strip() == "h"


class TestZhuCommands:
    """zhu product, commutator and pi."""

    def test_pi(self, capsys):
        """pi(T L) = -2 L."""
        code, out, _ = run(capsys, "zhu", "pi", "T(L)", "--builtin", "virasoro")
        assert code == 0
        assert out.strip() == "-2*L"

    def test_commutator(self, capsys):
        """[e, f] = h in Zhu of the currents."""
        code, out, _ = run(capsys, "zhu", "commutator", "e", "f", "--builtin", "cur-sl2")
        assert code == 0
        assert out.strip() == "h"

    def test_product(self, capsys):
        """f * e = e f - h."""
        code, out, _ = run(capsys, "zhu", "product", "f", "e", "--builtin", "cur-sl2")
        assert code == 0
        assert out.strip() == "-h + e*f"


class TestPvaCommands:
    """Hamiltonian flows and involutivity."""

    def test_kdv_flow(self, capsys):
        """h2 generates KdV."""
        code, out, _ = run(capsys, "pva", "flow", "--builtin", "gfz", "--h", "h2")
        assert code == 0
        assert out.strip() == "3*u*u' + u'''"

    def test_flow_from_file(self, capsys, samples_dir):
        """A density can be written in the element syntax."""
        code, out, _ = run(capsys, "pva", "flow", str(samples_dir / "gfz.pva"), "--h", ":u u:")
        assert code == 0
        assert out.strip() == "2*u'"

    def test_involution(self, capsys):
        """h0, h1 and h2 are in involution."""
        code, _, _ = run(
            capsys, "pva", "involution", "--builtin", "gfz", "--h", "h0", "--h", "h1", "--h", "h2"
        )
        assert code == 0

    def test_involution_failure(self, capsys):
        """int u u'^2 is not conserved by KdV: exit code 1."""
        code, _, _ = run(
            capsys, "pva", "involution", "--builtin", "gfz", "--h", "h2", "--h", ":u T(u) T(u):"
        )
        assert code == 1

    def test_wrong_kind(self, capsys):
        """pva commands refuse an [lca] spec."""
        code, _, _ = run(capsys, "pva", "flow", "--builtin", "virasoro", "--h", "L")
        assert code == 2


class TestAlgebraCommands:
    """W-algebras, Whittaker models and the Dirac operator."""

    def test_walg_build_specialized(self, capsys):
        """At k = 1 the central charge is -7."""
        code, out, _ = run(capsys, "--set", "k=1", "walg", "build", "--algebra", "sl2")
        assert code == 0
        assert "central charge: -7" in out

    def test_whittaker(self, capsys):
        """sl2 invariants match S(g^f) up to degree 4."""
        code, out, _ = run(capsys, "--machine", "walg", "whittaker", "--algebra", "sl2", "--cutoff", "4")
        assert code == 0
        payload = json.loads(out)
        assert payload["result"]["dims"] == {"0": 1, "1": 0, "2": 1, "3": 0, "4": 1}

    def test_dirac(self, capsys):
        """D^2 - C = 1/16 for sl2."""
        code, out, _ = run(capsys, "dirac", "--algebra", "sl2")
        assert code == 0
        assert "D^2 - C = 1/16" in out


class TestErrors:
    """Exit code 2 for usage, parse and validation errors."""

    def test_unknown_builtin(self, capsys):
        """Unknown names are usage errors."""
        code, _, err = run(capsys, "nf", "x", "--builtin", "nope")
        assert code == 2
        assert "error:" in err

    def test_machine_error(self, capsys):
        """Errors in machine mode are JSON too."""
        code, out, _ = run(capsys, "--machine", "nf", "M", "--builtin", "virasoro")
        assert code == 2
        payload = json.loads(out)
        assert payload["success"] is False
        assert payload["exit_code"] == 2

    def test_parse_error(self, capsys, tmp_path):
        """A broken file reports its line."""
        path = tmp_path / "broken.lca"
        path.write_text("[lca v]\ngenerator L delta=2\nbracket L L = T(L) +\n")
        code, _, err = run(capsys, "check", str(path))
        assert code == 2
        assert "line 3" in err

    def test_no_spec(self, capsys):
        """Exactly one of a file or --builtin is required."""
        code, _, _ = run(capsys, "check")
        assert code == 2

    @pytest.mark.parametrize("item", ["k", "=1", "nosuch=1", "2k=1"])
    def test_bad_assignment(self, capsys, item):
        """--set needs NAME=VALUE with a declared parameter name."""
        code, _, _ = run(capsys, "--set", item, "check", "--builtin", "virasoro")
        assert code == 2

    def test_assignment_declared_in_file(self, capsys, tmp_path):
        """Parameters from a [params] section can be set."""
        path = tmp_path / "scaled.lca"
        path.write_text(
            "[params]\nq\n\n[lca v]\ngenerator L delta=2\n"
            "bracket L L = T(L) + 2*lam*L + q*lam^3\n"
        )
        code, out, _ = run(capsys, "--set", "q=12", "ope", "L", "L", str(path))
        assert code == 0
        assert "q" not in out

    def test_bad_thread_environment(self, capsys, monkeypatch):
        """A non-numeric LAMBDA_FORGE_THREADS is a usage error."""
        monkeypatch.setenv("LAMBDA_FORGE_THREADS", "abc")
        code, _, _ = run(capsys, "ope", "L", "L", "--builtin", "virasoro")
        assert code == 2

    @pytest.mark.parametrize(
        "args",
        [
            ["walg", "generators", "--algebra", "sl2", "--maxdelta", "two"],
            ["walg", "whittaker", "--algebra", "sl2", "--cutoff", "two"],
            ["walg", "whittaker", "--algebra", "sl2", "--cutoff", "1/0"],
        ],
    )
    def test_bad_rational_option(self, capsys, args):
        """Weight and degree bounds must be rationals."""
        code, _, err = run(capsys, *args)
        assert code == 2
        assert "not a rational number" in err
