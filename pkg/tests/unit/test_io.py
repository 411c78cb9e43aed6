import hashlib
import textwrap
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

pytestmark = pytest.mark.unit


def test_model_csv_survives_write_and_read(tmp_path: Path, dax_model):
    from hjbflow.io.tables import read_model_csv, write_model_csv

    p = tmp_path / "model.csv"
    write_model_csv(dax_model, p)
    back = read_model_csv(p)
    assert np.array_equal(back.mu, dax_model.mu)
    assert np.array_equal(back.sigma, dax_model.sigma)
    assert len(p.read_text(encoding="utf-8").splitlines()) == 7


def test_model_csv_row_count_is_checked(tmp_path: Path):
    from hjbflow.io.tables import read_model_csv

    p = tmp_path / "model.csv"
    p.write_text("0.1,0.2\n1.0,0.0\n", encoding="utf-8")
    with pytest.raises(ValueError, match="expected 3 rows"):
        read_model_csv(p)


def test_model_fixture_file_reads(model_csv: Path):
    from hjbflow.io.tables import read_model_csv

    model = read_model_csv(model_csv)
    assert model.n == 3
    assert model.mu.tolist() == [0.12, 0.08, 0.05]


def test_price_frame_needs_date_first(tmp_path: Path):
    from hjbflow.io.tables import read_price_frame

    p = tmp_path / "prices.csv"
    p.write_text("AAA,date\n1.0,2011-01-03\n", encoding="utf-8")
    with pytest.raises(ValueError, match="date"):
        read_price_frame(p)
    p.write_text("date,AAA\n2011-01-03,1.0\n2011-01-04,1.1\n", encoding="utf-8")
    frame = read_price_frame(p)
    assert list(frame.columns) == ["AAA"]
    assert frame.index[1] == pd.Timestamp("2011-01-04")


def test_series_csv_sorts_and_checks_columns(tmp_path: Path):
    from hjbflow.io.tables import read_series_csv

    p = tmp_path / "series.csv"
    p.write_text(
        textwrap.dedent(
            """
            tau,value,note
            1.0,3.0,b
            0.0,2.0,a
            """
        ).lstrip(),
        encoding="utf-8",
    )
    keys, values = read_series_csv(p, ("tau", "value"))
    assert keys.tolist() == [0.0, 1.0]
    assert values.tolist() == [2.0, 3.0]
    with pytest.raises(ValueError, match="missing column"):
        read_series_csv(p, ("x", "phi"))


def test_piece_table_reads_back_the_same_alpha(tmp_path: Path, dax_alpha):
    from hjbflow.io.tables import pieces_frame, read_pieces_csv, write_table

    path = write_table(pieces_frame(dax_alpha), tmp_path / "pieces.csv")
    again = read_pieces_csv(path)
    assert again.breakpoints == dax_alpha.breakpoints
    phi = np.linspace(0.01, 9.0, 301)
    assert np.allclose(again.evaluate(phi)[0], dax_alpha.evaluate(phi)[0], rtol=0.0, atol=1e-14)


def test_piece_table_is_checked(tmp_path: Path):
    from hjbflow.io.tables import read_pieces_csv

    p = tmp_path / "pieces.csv"
    p.write_text("lo,hi,a,b\n0.1,1.0,1.0,0.0\n", encoding="utf-8")
    with pytest.raises(ValueError, match="missing column"):
        read_pieces_csv(p)
    p.write_text("lo,hi,a,b,c\n0.1,1.0,1.0,0.0,0.0\n1.5,2.0,1.0,0.0,0.0\n", encoding="utf-8")
    with pytest.raises(ValueError, match="tile"):
        read_pieces_csv(p)
    p.write_text("lo,hi,a,b,c\n0.1,1.0,1.0,,0.0\n", encoding="utf-8")
    with pytest.raises(ValueError):
        read_pieces_csv(p)


def test_write_table_uses_full_precision(tmp_path: Path):
    from hjbflow.io.tables import write_table

    out = write_table(pd.DataFrame({"v": [0.1], "n": [3]}), tmp_path / "sub" / "t.csv")
    assert out.read_text(encoding="utf-8").splitlines() == ["v,n", "1.0000000000000001e-01,3"]


def test_read_yaml_text():
    from hjbflow.io.yaml import read_yaml_text

    assert read_yaml_text("") == {}
    assert read_yaml_text("h: 0.05\nT: 2\n") == {"h": 0.05, "T": 2}
    with pytest.raises(ValueError, match="mapping"):
        read_yaml_text("- 1\n- 2\n")


def test_read_yaml_from_file(tmp_path: Path):
    from hjbflow.io.yaml import read_yaml

    p = tmp_path / "run.yaml"
    p.write_text("model: dax6\nphi-max: 9\n", encoding="utf-8")
    assert read_yaml(str(p)) == {"model": "dax6", "phi-max": 9}


def test_sha3_digest(tmp_path: Path):
    from hjbflow.io.fs import sha3_digest

    p = tmp_path / "blob.bin"
    p.write_bytes(b"abc" * 50_000)
    assert sha3_digest(p) == hashlib.sha3_256(b"abc" * 50_000).hexdigest()


def test_ensure_dir(tmp_path: Path):
    from hjbflow.io.fs import ensure_dir

    made = ensure_dir(tmp_path / "a" / "b")
    assert made.is_dir()
    assert ensure_dir(made) == made
    blocker = tmp_path / "file"
    blocker.write_text("x", encoding="utf-8")
    with pytest.raises(FileExistsError):
        ensure_dir(blocker)
