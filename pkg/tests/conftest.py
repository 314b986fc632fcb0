import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "ci",
    derandomize=True,
    deadline=None,
    max_examples=200,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ci")


@pytest.fixture
def tiny_project(tmp_path):
    """Four requirements, four code files, with an obvious vocabulary split."""
    sources = tmp_path / "sources"
    targets = tmp_path / "targets"
    sources.mkdir()
    targets.mkdir()
    texts = {
        "RQ1.txt": "The server shall negotiate certificate enrollment requests "
                   "certificate enrollment handshake",
        "RQ2.txt": "The client shall retry failed network transfer operations "
                   "network transfer retry backoff",
        "RQ3.txt": "The parser shall validate configuration syntax strictly "
                   "configuration syntax validation grammar",
        "RQ4.txt": "The logger shall rotate archive files daily "
                   "archive rotation schedule compression",
    }
    code = {
        "enroll.c": "int certificateEnrollment(handshake) { negotiate enrollment "
                    "certificate request server }",
        "transfer.c": "int networkTransfer(retry) { client backoff transfer "
                      "network failed operation retry }",
        "config.c": "int configParser(syntax) { validate configuration grammar "
                    "syntax strict parser }",
        "logging.c": "int archiveRotation(schedule) { logger rotate archive "
                     "daily compression file }",
    }
    for name, text in texts.items():
        (sources / name).write_text(text, encoding="utf-8")
    for name, text in code.items():
        (targets / name).write_text(text, encoding="utf-8")
    answers = tmp_path / "answers.tsv"
    answers.write_text(
        "RQ1.txt\tenroll.c\nRQ2.txt\ttransfer.c\nRQ3.txt\tconfig.c\n"
        "RQ4.txt\tlogging.c\n", encoding="utf-8")
    (tmp_path / "project.json").write_text(
        '{"name": "tiny", "source_dir": "sources", "target_dir": "targets", '
        '"pair_kind": "req_src", "answer_file": "answers.tsv"}\n',
        encoding="utf-8")
    return tmp_path


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
