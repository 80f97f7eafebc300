import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def gold_corpus_path() -> Path:
    return DATA / "gold" / "fixture_corpus.conllu"


@pytest.fixture(scope="session")
def pipeline_manifest_path() -> Path:
    return DATA / "manifest" / "pipeline_fixtures.jsonl"


@pytest.fixture(scope="session")
def replay_dir(tmp_path_factory, pipeline_manifest_path) -> Path:
    """A replay store seeded with the canned stage responses, recorded under
    the exact fingerprints replay-mode runs compute."""
    from spokenud.backends import ReplayStore
    from spokenud.config import load_config
    from spokenud.ioformats import load_manifest, manifest_entry_to_input_sentence
    from spokenud.pipeline import seed_replay_store

    config = load_config()
    directory = tmp_path_factory.mktemp("replay")
    store = ReplayStore(directory)
    manifest = load_manifest(pipeline_manifest_path)
    for entry in manifest.entries:
        responses = {
            stage: (DATA / "replay_scripts" /
                    f"{entry.sentence_id}.{stage}.json").read_text("utf-8")
            for stage in ("sph", "lsr", "core")
        }
        seed_replay_store(store, manifest_entry_to_input_sentence(entry),
                          responses, config.backend.model_name,
                          mwe_whitelist=config.mwe_whitelist)
    return directory
