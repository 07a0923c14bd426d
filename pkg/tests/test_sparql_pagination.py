import json

from confmeta.sparql_harvester import SparqlClient

PROCEEDINGS = "https://dblp.example/rec/conf/iswc2023"


def _page_body(start, count, page_size):
    return json.dumps({
        "head": {"vars": ["paper", "title", "doi", "pages", "year"]},
        "results": {"bindings": [
            {"paper": {"type": "uri", "value": f"{PROCEEDINGS}/{start + i}"},
             "title": {"type": "literal", "value": f"Paper {start + i}"},
             "doi": {"type": "uri", "value": f"https://doi.org/10.9999/fx.{start + i}"},
             "pages": {"type": "literal", "value": "1-2"},
             "year": {"type": "literal", "value": "2023"}}
            for i in range(count)
        ]},
    })


class PagingStubSession:
    """Serves 1,200 rows in LIMIT/OFFSET pages of 500."""

    def __init__(self, total=1200, page_size=500):
        self.total = total
        self.page_size = page_size
        self.queries = []

    def post(self, url, data=None, headers=None, timeout=None):
        query = data["query"]
        self.queries.append(query)
        offset = 0
        if "OFFSET" in query:
            offset = int(query.rsplit("OFFSET", 1)[1].strip())
        count = max(0, min(self.page_size, self.total - offset))

        class Resp:
            status_code = 200
            text = _page_body(offset, count, self.page_size)

        return Resp()


def test_truncating_endpoint_is_paged_until_short_page():
    session = PagingStubSession(total=1200, page_size=500)
    client = SparqlClient("https://dblp.example/sparql", session=session, page_size=500)
    rows = client.run_query("dblp_papers", {"proceedings_uri": PROCEEDINGS})
    assert len(rows) == 1200
    assert len(session.queries) == 3
    assert "LIMIT 500 OFFSET 0" in session.queries[0]
    assert "LIMIT 500 OFFSET 1000" in session.queries[2]


def test_record_then_replay_multi_page(tmp_path):
    session = PagingStubSession(total=700, page_size=500)
    recorder = SparqlClient(
        "https://dblp.example/sparql", record_dir=tmp_path, session=session, page_size=500
    )
    recorded = recorder.run_query("dblp_papers", {"proceedings_uri": PROCEEDINGS})
    assert len(recorded) == 700
    assert len(list(tmp_path.glob("dblp_papers-*.json"))) == 2

    replayer = SparqlClient("https://dblp.example/sparql", replay_dir=tmp_path, page_size=500)
    assert replayer.run_query("dblp_papers", {"proceedings_uri": PROCEEDINGS}) == recorded


def test_single_page_fixture_unaffected(fixtures):
    client = SparqlClient("https://dblp.example/sparql", replay_dir=fixtures / "sparql")
    rows = client.run_query("dblp_papers", {"proceedings_uri": PROCEEDINGS})
    assert len(rows) == 4  # raw rows; dedupe/DOI filtering happens downstream
