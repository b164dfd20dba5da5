from __future__ import annotations

from pathlib import Path

from ..errors import ArtifactNotFound, InputError
from ._options import ConfigOptions, Option
from ._parser import ConfigParser, OptionsSection
from ._values import BoolValue, EnumValue, FloatValue, IntValue, StrValue

DEFAULT_CONFIG_NAME = "forge.cfg"


class GeneralOptions(ConfigOptions):
    seed = Option(IntValue(min=0), 0)
    """Seed from which every random stream of every stage is derived."""

    jobs = Option(IntValue(min=0), 0)
    """Maximum number of concurrent jobs, ``0`` uses the CPU count."""


class PathOptions(ConfigOptions):
    """Stage inputs and outputs. Relative paths are relative to the config file's directory."""

    source = Option(StrValue(), "fixtures/servers")
    servers = Option(StrValue(), "out/servers.jsonl")
    graph = Option(StrValue(), "out/graph.jsonl")
    dags = Option(StrValue(), "out/dags.jsonl")
    tasks = Option(StrValue(), "out/tasks.jsonl")
    validated = Option(StrValue(), "out/validated.jsonl")
    train = Option(StrValue(), "out/train.jsonl")
    test = Option(StrValue(), "out/test.jsonl")
    cassette = Option(StrValue(), "out/cassette.jsonl")
    overlay = Option(StrValue(), "out/overlay.jsonl")
    rewards = Option(StrValue(), "out/rewards.jsonl")
    report = Option(StrValue(), "out/passk.json")
    stats = Option(StrValue(), "out/stats.json")
    curriculum = Option(StrValue(), "out/curriculum")


class IngestOptions(ConfigOptions):
    queries = Option(StrValue(allow_empty=True), "")
    """Comma separated registry queries. Empty means a single broad listing query."""

    spot_check = Option(IntValue(min=0), 5)

    @property
    def query_list(self) -> list[str]:
        queries = [query.strip() for query in self.queries.split(",")]
        return [query for query in queries if query] or [""]


class GatewayOptions(ConfigOptions):
    mode = Option(EnumValue("stub", "http"), "stub")
    rules = Option(StrValue(), "stub_rules.txt")
    endpoint = Option(StrValue(allow_empty=True), "")
    credential_env = Option(StrValue(), "MCP_FORGE_JUDGE_KEY")
    """Name of the environment variable holding the credential, never the credential itself."""
    model = Option(StrValue(), "judge")
    retries = Option(IntValue(min=1), 3)
    cache = Option(StrValue(allow_empty=True), "out/judge_cache.jsonl")
    timeout = Option(FloatValue(min=0), 60.0)

    def validate(self) -> None:
        if self.mode == "http" and not self.endpoint:
            raise InputError(self.where, "gateway mode `http` requires an `endpoint` option")


class GraphOptions(ConfigOptions):
    prefilter = Option(BoolValue(), False)
    checkpoint = Option(StrValue(allow_empty=True), "")


class ExploreOptions(ConfigOptions):
    backend = Option(StrValue(), "fixtures/recordings.jsonl")
    """A cassette path, ``live`` for the servers' own endpoints, or an MCP ``http(s)://`` URL."""
    budget = Option(IntValue(min=1), 6)
    frontier = Option(IntValue(min=1), 8)
    floor = Option(EnumValue("low", "medium", "high"), "medium")
    per_start = Option(IntValue(min=1), 1)
    temperature = Option(FloatValue(min=0), 0.0)
    retries = Option(IntValue(min=0), 2)


class SynthesizeOptions(ConfigOptions):
    variants = Option(IntValue(min=1), 2)


class SplitOptions(ConfigOptions):
    test_size = Option(IntValue(min=0), 200)


class SimulateOptions(ConfigOptions):
    top_k = Option(IntValue(min=1), 5)
    host = Option(StrValue(), "127.0.0.1")
    port = Option(IntValue(min=1, max=65535), 8931)
    transcript = Option(StrValue(allow_empty=True), "")


class EvaluateOptions(ConfigOptions):
    agent = Option(StrValue(), "scripted")
    rollouts = Option(IntValue(min=1), 16)
    ks = Option(StrValue(), "1,4,8,16")
    temperature = Option(FloatValue(min=0), 1.0)
    batch_size = Option(IntValue(min=1), 16)
    curriculum_rollouts = Option(IntValue(min=1), 8)
    threshold = Option(IntValue(min=0), 10)
    steps = Option(IntValue(min=1), 4)

    @property
    def k_list(self) -> list[int]:
        try:
            return [int(k) for k in self.ks.split(",") if k.strip()]
        except ValueError:
            raise InputError(self.where, "option `ks` expects comma separated integers") from None


class PipelineConfig(ConfigParser):
    """The pipeline configuration, parsed from a ``forge.cfg`` file.

    Example::

        [options]
        seed 7

        [gateway]
        mode stub
        rules stub_rules.txt

        [explore]
        budget 6
        floor medium
    """

    options = OptionsSection(GeneralOptions)
    paths = OptionsSection(PathOptions)
    ingest = OptionsSection(IngestOptions)
    gateway = OptionsSection(GatewayOptions)
    graph = OptionsSection(GraphOptions)
    explore = OptionsSection(ExploreOptions)
    synthesize = OptionsSection(SynthesizeOptions)
    split = OptionsSection(SplitOptions)
    simulate = OptionsSection(SimulateOptions)
    evaluate = OptionsSection(EvaluateOptions)

    base_dir: Path = Path(".")

    def path(self, value: str | Path) -> Path:
        """Resolve a configured path against the directory of the config file."""
        path = Path(value)
        return path if path.is_absolute() else self.base_dir / path


def load_config(path: str | Path | None = None) -> PipelineConfig:
    """Load the pipeline configuration.

    Without an explicit path, ``forge.cfg`` in the current directory is used when present and the
    built-in defaults otherwise.
    """
    if path is None:
        if not Path(DEFAULT_CONFIG_NAME).exists():
            return PipelineConfig("", "<defaults>")
        path = DEFAULT_CONFIG_NAME
    path = Path(path)
    try:
        contents = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ArtifactNotFound(f"config file `{path}` not found") from None
    config = PipelineConfig(contents, str(path))
    config.base_dir = path.parent
    return config
