"""Definition and job file loading, rendering, and validation."""

from __future__ import annotations

import pytest

import gridpipe.config as config_mod
from gridpipe.config import (
    DefinitionError,
    DuplicateCell,
    LimitExceeded,
    UnknownKey,
    UnknownRangeName,
    UnknownSection,
    load_definition,
    load_job,
    render_definition,
)
from gridpipe.engine import CycleError, recalculate
from gridpipe.errors import ConfigError
from gridpipe.formula import render_formula
from gridpipe.sortio import SortKey
from gridpipe.values import BLANK
from gridpipe.workbook import parse_a1


def _addr(a1, sheet="Main"):
    return parse_a1(a1, sheet)


def _definition(tmp_path, text, name="rules.sheet"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


# --- load_definition -----------------------------------------------------------


def test_fixture_workbook_loads_with_names_and_graph(fixtures_dir):
    wb = load_definition(fixtures_dir / "caesar.sheet")
    assert wb.has_name("InputCells")
    assert wb.resolve_name("inputcells").size() == 4
    assert wb.graph is not None
    arabic_cell = _addr("F2").key()
    concat_cell = _addr("H2").key()
    assert wb.graph.topo_index[arabic_cell] < wb.graph.topo_index[concat_cell]


def test_empty_file_gives_empty_workbook(tmp_path):
    wb = load_definition(_definition(tmp_path, ""))
    assert wb.cell_count() == 0
    assert wb.defined_names() == []


def test_value_kinds(tmp_path):
    wb = load_definition(
        _definition(
            tmp_path,
            "\n".join(
                [
                    "[sheet Main]",
                    "cell A1 = Plain text",
                    "cell A2 = 42",
                    "cell A3 = -2.5",
                    'cell A4 = "  padded "',
                    'cell A5 = "say ""hi"""',
                    "cell A6 = =A2+A3",
                    "cell A7 = 007",
                ]
            ),
        )
    )
    assert wb.get_value(_addr("A1")) == "Plain text"
    assert wb.get_value(_addr("A2")) == 42.0
    assert wb.get_value(_addr("A3")) == -2.5
    assert wb.get_value(_addr("A4")) == "  padded "
    assert wb.get_value(_addr("A5")) == 'say "hi"'
    assert wb.get_value(_addr("A7")) == 7.0  # bare numbers are numbers
    recalculate(wb)
    assert wb.get_value(_addr("A6")) == 39.5


def test_comments_and_blank_lines_ignored(tmp_path):
    wb = load_definition(
        _definition(
            tmp_path,
            "# a comment\n\nformat = 1\n[sheet Main]\n# another\ncell A1 = 1\n",
        )
    )
    assert wb.get_value(_addr("A1")) == 1.0


def test_inverted_name_corners_are_normalized(tmp_path):
    wb = load_definition(
        _definition(tmp_path, "[sheet Main]\ncell A1 = 1\n[names]\nX = Main!B2:A1\n")
    )
    rng = wb.resolve_name("X")
    assert (rng.start.row, rng.start.col, rng.end.row, rng.end.col) == (1, 1, 2, 2)


def test_single_cell_name_accepted(tmp_path):
    wb = load_definition(_definition(tmp_path, "[names]\nHome = Main!C3\n"))
    assert wb.resolve_name("Home").size() == 1


def test_duplicate_cell_rejected(tmp_path):
    with pytest.raises(DuplicateCell):
        load_definition(
            _definition(tmp_path, "[sheet Main]\ncell A1 = 1\ncell A1 = 2\n")
        )


def test_cell_outside_sheet_section(tmp_path):
    with pytest.raises(DefinitionError) as err:
        load_definition(_definition(tmp_path, "cell A1 = 1\n"))
    assert ":1:" in str(err.value)


def test_formula_parse_error_carries_line_number(tmp_path):
    with pytest.raises(DefinitionError) as err:
        load_definition(
            _definition(tmp_path, "[sheet Main]\ncell A1 = 1\ncell A2 = =1+\n")
        )
    assert ":3:" in str(err.value)


def test_cycle_detected_at_load(tmp_path):
    with pytest.raises(CycleError):
        load_definition(
            _definition(tmp_path, "[sheet Main]\ncell A1 = =B1\ncell B1 = =A1\n")
        )


def test_unknown_section_in_definition(tmp_path):
    with pytest.raises(DefinitionError):
        load_definition(_definition(tmp_path, "[stuff]\nx = 1\n"))


def test_unsupported_format_rejected(tmp_path):
    with pytest.raises(DefinitionError):
        load_definition(_definition(tmp_path, "format = 2\n"))


def test_missing_definition_file_is_config_error(tmp_path):
    with pytest.raises(ConfigError):
        load_definition(tmp_path / "absent.sheet")


# --- render round trip ------------------------------------------------------------


def _workbook_state(wb):
    formulas = {
        key: render_formula(wb._formulas[key]) for key, is_f in wb.populated() if is_f
    }
    literals = {
        key: wb._literals[key]
        for key, is_f in wb.populated()
        if not is_f and wb._literals[key] is not BLANK
    }
    names = {n.name.upper(): str(n.range) for n in wb.defined_names()}
    order = wb.graph.order if wb.graph else None
    return formulas, literals, names, order


@pytest.mark.parametrize("fixture", ["caesar.sheet", "dedup.sheet", "compare.sheet"])
def test_render_load_round_trip_on_fixtures(fixtures_dir, tmp_path, fixture):
    original = load_definition(fixtures_dir / fixture)
    rendered = render_definition(original)
    reloaded = load_definition(_definition(tmp_path, rendered, "again.sheet"))
    assert _workbook_state(reloaded) == _workbook_state(original)
    # and rendering is a fixed point from the first canonical form on
    assert render_definition(reloaded) == rendered


def test_render_round_trip_preserves_tricky_literals(tmp_path):
    text = "\n".join(
        [
            "[sheet Main]",
            'cell A1 = "  spaced  "',
            'cell A2 = "=not a formula"',
            'cell A3 = "12"',
            "cell A4 = 12",
            'cell A5 = "with ""quotes"" inside"',
            "cell A6 = =A4*2",
        ]
    )
    original = load_definition(_definition(tmp_path, text))
    reloaded = load_definition(
        _definition(tmp_path, render_definition(original), "again.sheet")
    )
    assert _workbook_state(reloaded) == _workbook_state(original)
    assert reloaded.get_value(_addr("A2")) == "=not a formula"
    assert reloaded.get_value(_addr("A3")) == "12"
    assert reloaded.get_value(_addr("A4")) == 12.0


# --- load_job -----------------------------------------------------------------------


def _job(tmp_path, text, name="job.job"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


_MINIMAL_SHEET = (
    "[sheet Main]\ncell B2 = =A2\n"
    "[names]\nInputCells = Main!A2\nOutputCells = Main!B2\n"
)


def _minimal_job_text(extra=""):
    return (
        "definition = rules.sheet\n"
        "[pipeline]\ninput = in.csv\noutput = out.csv\n"
        "input-range = InputCells\noutput-range = OutputCells\n" + extra
    )


def test_load_job_minimal(tmp_path):
    _definition(tmp_path, _MINIMAL_SHEET)
    job = load_job(_job(tmp_path, _minimal_job_text()))
    assert job.pipeline is not None
    assert job.pipeline.input_path == str(tmp_path / "in.csv")
    assert job.pipeline.csv_mode == "rfc4180"
    assert job.workbook.has_name("InputCells")
    assert job.sort is None and job.subtotals is None and job.compare is None


def test_relative_paths_resolve_against_job_directory(tmp_path):
    nested = tmp_path / "jobs"
    nested.mkdir()
    _definition(nested, _MINIMAL_SHEET)
    job = load_job(_job(nested, _minimal_job_text()))
    assert job.definition_path == str(nested / "rules.sheet")
    assert job.pipeline.output_path == str(nested / "out.csv")


def test_unknown_section(tmp_path):
    _definition(tmp_path, _MINIMAL_SHEET)
    with pytest.raises(UnknownSection):
        load_job(_job(tmp_path, _minimal_job_text() + "[mystery]\nx = 1\n"))


def test_unknown_key(tmp_path):
    _definition(tmp_path, _MINIMAL_SHEET)
    with pytest.raises(UnknownKey):
        load_job(_job(tmp_path, _minimal_job_text("tempo = fast\n")))


def test_unknown_range_name(tmp_path):
    _definition(tmp_path, _MINIMAL_SHEET)
    text = _minimal_job_text().replace("OutputCells", "OutputCellz")
    with pytest.raises(UnknownRangeName) as err:
        load_job(_job(tmp_path, text))
    assert "OutputCellz" in str(err.value)


def test_limit_on_control_entries(tmp_path):
    _definition(tmp_path, _MINIMAL_SHEET)
    jobs = "".join("job = Number : Item\n" for _ in range(10_001))
    text = _minimal_job_text() + "[subtotals]\n" + jobs
    with pytest.raises(LimitExceeded):
        load_job(_job(tmp_path, text))
    # raising the cap clears it
    text += "[limits]\nmax-control-entries = 20000\n"
    job = load_job(_job(tmp_path, text, "ok.job"))
    assert len(job.subtotals.job_lines) == 10_001


def test_sort_key_parsing(tmp_path):
    _definition(tmp_path, _MINIMAL_SHEET)
    text = _minimal_job_text() + (
        "[sort]\ninput = a.csv\noutput = b.csv\nheadings = y\n"
        "key = 2 desc\nkey = Item text\nkey = 1\n"
    )
    job = load_job(_job(tmp_path, text))
    assert job.sort.keys == [
        SortKey(2, descending=True),
        SortKey("Item", collation="text"),
        SortKey(1),
    ]
    assert job.sort.has_headings is True


def test_validate_header_policy_requires_expected_headers(tmp_path):
    _definition(tmp_path, _MINIMAL_SHEET)
    with pytest.raises(ConfigError):
        load_job(_job(tmp_path, _minimal_job_text("header = validate\n")))
    ok = load_job(
        _job(
            tmp_path,
            _minimal_job_text("header = validate\n")
            + "[expected-headers]\nheaders = Id\n",
            "ok.job",
        )
    )
    assert ok.pipeline.expected_headers == ["Id"]


def test_repeated_key_rejected(tmp_path):
    _definition(tmp_path, _MINIMAL_SHEET)
    with pytest.raises(DefinitionError):
        load_job(_job(tmp_path, _minimal_job_text("input = again.csv\n")))


def test_missing_required_key(tmp_path):
    _definition(tmp_path, _MINIMAL_SHEET)
    text = "definition = rules.sheet\n[pipeline]\ninput = in.csv\n"
    with pytest.raises(ConfigError) as err:
        load_job(_job(tmp_path, text))
    assert "output" in str(err.value)


def test_pipeline_without_definition_rejected(tmp_path):
    text = "[pipeline]\ninput = a\noutput = b\n"
    with pytest.raises(ConfigError):
        load_job(_job(tmp_path, text))


def test_bad_choice_values(tmp_path):
    _definition(tmp_path, _MINIMAL_SHEET)
    with pytest.raises(ConfigError):
        load_job(_job(tmp_path, _minimal_job_text("csv = tabs\n")))
    with pytest.raises(ConfigError):
        load_job(_job(tmp_path, _minimal_job_text("header = maybe\n"), "b.job"))
    with pytest.raises(ConfigError):
        load_job(
            _job(
                tmp_path,
                _minimal_job_text()
                + "[sort]\ninput = a\noutput = b\nheadings = sure\n",
                "c.job",
            )
        )


def test_store_job_fixture_loads(workdir):
    job = load_job(workdir / "store.job")
    assert job.sort is not None and job.pipeline is not None
    assert job.subtotals.job_lines == ["Number : Item, Colour"]
    assert job.pipeline.skip_cell == "Duplicate"


# --- read-once guarantee ---------------------------------------------------------


def test_config_files_read_exactly_once_per_run(workdir, monkeypatch):
    (workdir / "caesar_in.csv").write_text(
        "Id,Item,Colour,Number\n1,Toga,Purple,MCDLIX\n", encoding="utf-8"
    )
    reads: dict[str, int] = {}
    real_read = config_mod._read_text

    def counting_read(path):
        key = str(path)
        reads[key] = reads.get(key, 0) + 1
        return real_read(path)

    monkeypatch.setattr(config_mod, "_read_text", counting_read)

    from gridpipe.cli import main

    assert main(["--quiet", "run", str(workdir / "caesar.job")]) == 0
    job_reads = {k: v for k, v in reads.items() if k.endswith((".job", ".sheet"))}
    assert job_reads == {
        str(workdir / "caesar.job"): 1,
        str(workdir / "caesar.sheet"): 1,
    }
