"""
Tests for the sectioned spec file format.
"""

import pytest

from lambda_forge.errors import ParseError, SpecValidationError
from lambda_forge.fileformat import format_file, load_file, parse_spec, parse_text, parse_vector
from lambda_forge.liealg import LieAlgData, validate
from lambda_forge.pva import PvaSpec, kdv_flow
from lambda_forge.scalar import Scalar
from lambda_forge.wick import LcaSpec, WickEngine


class TestSamples:
    """The shipped sample files load and validate."""

    def test_virasoro(self, samples_dir):
        """[params] declares c and the table matches the built-in Virasoro."""
        specs = load_file(samples_dir / "virasoro.lca")
        assert specs.params == ["c"]
        spec = specs.primary
        assert isinstance(spec, LcaSpec)
        assert spec.name == "virasoro"
        engine = WickEngine(spec)
        L = engine.parse("L")
        products = engine.products(L, L)
        assert products[3].constant() == Scalar.param("c") / 2

    @pytest.mark.parametrize("name", ["sl2.liealg", "sl3.liealg"])
    def test_liealg(self, samples_dir, name):
        """Matrix algebras pass every structural check."""
        data = parse_spec(samples_dir / name)
        assert isinstance(data, LieAlgData)
        assert validate(data).passed

    def test_gfz(self, samples_dir):
        """The GFZ file drives the KdV flow."""
        spec = parse_spec(samples_dir / "gfz.pva")
        assert isinstance(spec, PvaSpec)
        assert spec.format(kdv_flow(spec)) == "3*u*u' + u'''"

    def test_round_trip(self, samples_dir):
        """Printing and re-reading gives the same text."""
        for name in ("virasoro.lca", "sl2.liealg", "gfz.pva"):
            text = format_file(load_file(samples_dir / name))
            assert format_file(parse_text(text)) == text

    def test_get_by_name(self):
        """Several sections in one file are addressable by name."""
        specs = parse_text(
            "[lca boson]\ngenerator a delta=1\nbracket a a = lam\n\n"
            "[pva classical]\ngenerator u delta=1\nbracket u u = lam\n"
        )
        assert isinstance(specs.get("boson"), LcaSpec)
        assert isinstance(specs.get("classical"), PvaSpec)
        with pytest.raises(KeyError):
            specs.get("missing")

    def test_parse_vector(self, sl2_data):
        """Grading elements are written as combinations of basis names."""
        assert parse_vector(sl2_data, "h/2") == {sl2_data.lookup("h"): Scalar(1) / 2}


class TestErrors:
    """Parse errors carry positions; invariant violations name the invariant."""

    def test_content_before_header(self):
        """Lines need a section."""
        with pytest.raises(ParseError) as err:
            parse_text("generator L delta=2\n")
        assert err.value.line == 1

    def test_unknown_generator(self):
        """Bracket lines may only use declared generators."""
        with pytest.raises(ParseError) as err:
            parse_text("[lca v]\ngenerator L delta=2\nbracket L M = L\n")
        assert err.value.line == 3

    def test_bad_expression(self):
        """A truncated bracket value is reported on its own line."""
        text = "# comment\n[lca v]\ngenerator L delta=2\n\nbracket L L = T(L) +\n"
        with pytest.raises(ParseError) as err:
            parse_text(text)
        assert err.value.line == 5

    def test_unknown_option(self):
        """Generator options are a closed set."""
        with pytest.raises(ParseError):
            parse_text("[lca v]\ngenerator L weight=2\n")

    def test_form_outside_liealg(self):
        """form lines belong to Lie superalgebras."""
        with pytest.raises(ParseError):
            parse_text("[lca v]\ngenerator L delta=2\nform L L = 1\n")

    def test_grading_violation(self):
        """[L lam L] = 3L has the wrong conformal weight."""
        with pytest.raises(SpecValidationError) as err:
            parse_text("[lca v]\ngenerator L delta=2\nbracket L L = 3*L\n")
        assert err.value.invariant == "GradingViolation"

    def test_skewsymmetry(self):
        """[a lam a] = a is not skewsymmetric for an even a."""
        text = "[lca v]\nhamiltonian = false\ngenerator a delta=1\nbracket a a = a\n"
        with pytest.raises(SpecValidationError) as err:
            parse_text(text)
        assert err.value.invariant == "skewsymmetry"

    def test_missing_file(self, tmp_path):
        """Unreadable paths are parse errors."""
        with pytest.raises(ParseError):
            load_file(tmp_path / "missing.lca")

    def test_empty_file(self):
        """A file without sections has no primary algebra."""
        with pytest.raises(ParseError):
            parse_text("# nothing here\n").primary
