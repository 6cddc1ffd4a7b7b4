import pytest

from vtgkit.tables import FORMATS, render_table

HEADERS = ["name", "value"]
ROWS = [["alpha", "1.5"], ["b", "22"]]


def test_comma_separated():
    text = render_table(HEADERS, ROWS, "comma-separated")
    assert text == "name,value\nalpha,1.5\nb,22\n"


def test_comma_separated_quotes_commas():
    text = render_table(["a"], [["x,y"]], "comma-separated")
    assert '"x,y"' in text


def test_markdown_table():
    text = render_table(HEADERS, ROWS, "markdown-table")
    assert text.splitlines() == [
        "| name | value |",
        "| --- | --- |",
        "| alpha | 1.5 |",
        "| b | 22 |",
    ]


def test_aligned_text():
    text = render_table(HEADERS, ROWS, "aligned-text")
    lines = text.splitlines()
    assert lines[0] == "name   value"
    assert lines[1] == "alpha    1.5"
    assert lines[2] == "b         22"
    # no trailing spaces anywhere
    assert all(line == line.rstrip() for line in lines)


def test_unknown_format():
    with pytest.raises(ValueError, match="unknown format 'tsv'"):
        render_table(HEADERS, ROWS, "tsv")
    assert FORMATS == ("aligned-text", "comma-separated", "markdown-table")
