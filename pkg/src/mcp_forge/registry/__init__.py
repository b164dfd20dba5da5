from ._records import (
    CRITERIA,
    SERVERS_KIND,
    Connection,
    ScreeningVerdict,
    ServerRecord,
    load_servers,
    parse_server,
    save_servers,
)
from ._screen import (
    METADATA_NOTE,
    funnel,
    metadata_checks,
    screen_all,
    screen_prompt,
    screen_server,
    spot_check_sample,
)
from ._sources import (
    SourceUnreachable,
    dedup_servers,
    fetch_registry,
    list_servers,
    load_fixture_dir,
    matches_query,
)

__all__ = [
    "CRITERIA",
    "SERVERS_KIND",
    "Connection",
    "ScreeningVerdict",
    "ServerRecord",
    "load_servers",
    "parse_server",
    "save_servers",
    "METADATA_NOTE",
    "funnel",
    "metadata_checks",
    "screen_all",
    "screen_prompt",
    "screen_server",
    "spot_check_sample",
    "SourceUnreachable",
    "dedup_servers",
    "fetch_registry",
    "list_servers",
    "load_fixture_dir",
    "matches_query",
]
