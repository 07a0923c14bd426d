import pytest
from pathlib import Path

FIXTURES = Path(__file__).parent / "fixtures"
REPO_ROOT = Path(__file__).parent.parent


@pytest.fixture
def fixtures() -> Path:
    return FIXTURES


@pytest.fixture
def vocabulary():
    from confmeta.kg_model import MappingVocabulary

    return MappingVocabulary.load(REPO_ROOT / "configs" / "vocabulary.json")


@pytest.fixture
def pipeline_config():
    from confmeta.orchestrator.config import PipelineConfig

    return PipelineConfig.load(FIXTURES / "pipeline_iswc2023.json")
