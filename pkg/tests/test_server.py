import json

import pytest
from fastapi.testclient import TestClient

from aiti.server import MEDIA_TYPE, ObjectStore, create_app, server_config_from_dict
from tests.test_store import TickingClock

RW_TOKEN = "rw-token"
RO_TOKEN = "ro-token"
VULNS = "91a7b528-80eb-42ed-a74d-c6fbd5a26116"
DROPBOX = "5bb5fc3e-26f7-4ab7-9b4c-3e84b4931a35"
ARCHIVE = "7e5b3c30-9d1a-45cc-9f4e-5e7d4f7f2f10"

CONFIG = {
    "host": "127.0.0.1",
    "port": 0,
    "title": "desk exchange",
    "description": "test server",
    "default_root": "aiti",
    "api_roots": [
        {
            "name": "aiti",
            "title": "AI vulnerability intel",
            "collections": [
                {"id": VULNS, "title": "ai-vulns", "alias": "ai-vulns"},
                {"id": DROPBOX, "title": "dropbox", "can_read": False},
                {"id": ARCHIVE, "title": "archive", "can_write": False},
            ],
        }
    ],
    "tokens": [
        {"token": RW_TOKEN},
        {"token": RO_TOKEN, "can_write": False},
    ],
    "log_file": "objects.jsonl",
}


def auth(token=RW_TOKEN):
    return {"Authorization": f"Bearer {token}"}


def make_object(n: int, created="2024-01-01T00:00:00Z"):
    return {
        "type": "identity",
        "id": f"identity--00000000-0000-4000-8000-{n:012d}",
        "created": created,
        "name": f"object {n}",
    }


@pytest.fixture
def client(tmp_path):
    config = server_config_from_dict(CONFIG, base_dir=tmp_path)
    store = ObjectStore(tmp_path / "objects.jsonl", clock=TickingClock())
    app = create_app(config, store=store)
    with TestClient(app) as test_client:
        yield test_client


def push(client, objects, collection=VULNS, token=RW_TOKEN):
    return client.post(
        f"/aiti/collections/{collection}/objects/",
        json={"objects": objects},
        headers=auth(token),
    )


# ---------------------------------------------------------------------------
# Discovery and metadata
# ---------------------------------------------------------------------------


def test_discovery_document(client):
    response = client.get("/taxii2/")
    assert response.status_code == 200
    assert response.headers["content-type"] == MEDIA_TYPE
    doc = response.json()
    assert doc["title"] == "desk exchange"
    assert doc["default"] == "/aiti/"
    assert doc["api_roots"] == ["/aiti/"]


def test_discovery_with_no_roots(tmp_path):
    config = server_config_from_dict(
        {"title": "empty", "tokens": [{"token": "t"}], "log_file": "x.jsonl"}, base_dir=tmp_path
    )
    app = create_app(config, store=ObjectStore(tmp_path / "x.jsonl"))
    with TestClient(app) as client:
        doc = client.get("/taxii2/").json()
        assert doc["api_roots"] == []
        assert "default" not in doc


def test_api_root_document(client):
    doc = client.get("/aiti/", headers=auth()).json()
    assert doc["title"] == "AI vulnerability intel"
    assert MEDIA_TYPE in doc["versions"]
    assert doc["max_content_length"] > 0


def test_unknown_root_is_404(client):
    assert client.get("/nope/", headers=auth()).status_code == 404
    assert client.get("/nope/collections/", headers=auth()).status_code == 404


def test_list_collections_echoes_config(client):
    doc = client.get("/aiti/collections/", headers=auth()).json()
    by_title = {c["title"]: c for c in doc["collections"]}
    assert by_title["ai-vulns"]["can_read"] is True
    assert by_title["ai-vulns"]["can_write"] is True
    assert by_title["ai-vulns"]["alias"] == "ai-vulns"
    assert by_title["dropbox"]["can_read"] is False
    assert by_title["archive"]["can_write"] is False


def test_collection_by_alias_equals_by_id(client):
    by_id = client.get(f"/aiti/collections/{VULNS}/", headers=auth()).json()
    by_alias = client.get("/aiti/collections/ai-vulns/", headers=auth()).json()
    assert by_id == by_alias
    assert by_id["id"] == VULNS


def test_unknown_collection_is_404(client):
    assert client.get("/aiti/collections/bogus/", headers=auth()).status_code == 404


# ---------------------------------------------------------------------------
# Auth
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "method,path",
    [
        ("GET", "/aiti/"),
        ("GET", "/aiti/collections/"),
        ("GET", f"/aiti/collections/{VULNS}/"),
        ("GET", f"/aiti/collections/{VULNS}/objects/"),
        ("POST", f"/aiti/collections/{VULNS}/objects/"),
        ("GET", f"/aiti/collections/{VULNS}/objects/identity--x/"),
    ],
)
def test_data_endpoints_require_bearer(client, method, path):
    no_token = client.request(method, path)
    assert no_token.status_code == 401
    bad_token = client.request(method, path, headers=auth("wrong"))
    assert bad_token.status_code == 401
    assert bad_token.headers["content-type"] == MEDIA_TYPE
    assert bad_token.json()["http_status"] == "401"


def test_write_scope_enforced(client):
    response = push(client, [make_object(1)], token=RO_TOKEN)
    assert response.status_code == 403
    # read-only collection rejects writes for any token
    assert push(client, [make_object(1)], collection=ARCHIVE).status_code == 403


def test_read_flag_enforced(client):
    assert push(client, [make_object(1)], collection=DROPBOX).status_code == 200
    response = client.get(f"/aiti/collections/{DROPBOX}/objects/", headers=auth())
    assert response.status_code == 403


# ---------------------------------------------------------------------------
# Adding objects
# ---------------------------------------------------------------------------


def test_add_three_valid_objects(client):
    response = push(client, [make_object(n) for n in (1, 2, 3)])
    assert response.status_code == 200
    status = response.json()
    assert status["status"] == "complete"
    assert status["total_count"] == 3
    assert status["success_count"] == 3
    assert status["failure_count"] == 0
    assert status["pending_count"] == 0
    assert status["total_count"] == (
        status["success_count"] + status["failure_count"] + status["pending_count"]
    )


def test_add_reports_invalid_objects(client):
    broken = {"type": "identity", "id": "identity--broken", "name": "no created"}
    status = push(client, [make_object(1), make_object(2), broken]).json()
    assert status["success_count"] == 2
    assert status["failure_count"] == 1
    failure = status["failures"][0]
    assert failure["id"] == "identity--broken"
    assert "/created" in failure["message"]


def test_add_is_idempotent_for_same_version(client, tmp_path):
    assert push(client, [make_object(1)]).json()["success_count"] == 1
    status = push(client, [make_object(1)]).json()
    assert status["success_count"] == 1
    assert status["failure_count"] == 0
    # the dumped store holds a single record
    log_lines = (tmp_path / "objects.jsonl").read_text().splitlines()
    assert len(log_lines) == 1


def test_malformed_envelope_is_422(client):
    response = client.post(
        f"/aiti/collections/{VULNS}/objects/", json={"bundle": []}, headers=auth()
    )
    assert response.status_code == 422
    response = client.post(
        f"/aiti/collections/{VULNS}/objects/",
        content=b"{not json",
        headers={**auth(), "Content-Type": MEDIA_TYPE},
    )
    assert response.status_code == 422


# ---------------------------------------------------------------------------
# Retrieval, filtering, pagination
# ---------------------------------------------------------------------------


def test_empty_collection_envelope(client):
    doc = client.get(f"/aiti/collections/{VULNS}/objects/", headers=auth()).json()
    assert doc == {"more": False, "objects": []}


def test_pagination_walk(client):
    push(client, [make_object(n) for n in (1, 2, 3)])
    page1 = client.get(
        f"/aiti/collections/{VULNS}/objects/", params={"limit": 2}, headers=auth()
    ).json()
    assert page1["more"] is True
    assert "next" in page1
    assert len(page1["objects"]) == 2
    page2 = client.get(
        f"/aiti/collections/{VULNS}/objects/",
        params={"limit": 2, "next": page1["next"]},
        headers=auth(),
    ).json()
    assert page2["more"] is False
    assert "next" not in page2
    assert len(page2["objects"]) == 1
    ids = [o["id"] for o in page1["objects"] + page2["objects"]]
    assert ids == [make_object(n)["id"] for n in (1, 2, 3)]


def test_pagination_completeness_brute_force(client, tmp_path):
    pushed = [make_object(n) for n in range(1, 8)]
    push(client, pushed)
    # oracle: the expected sequence comes straight from the dumped log
    log = [json.loads(line) for line in (tmp_path / "objects.jsonl").read_text().splitlines()]
    expected = [record["object"]["id"] for record in sorted(log, key=lambda r: r["seq"])]
    for limit in (1, 2, 3, 5, 7, 50):
        collected = []
        params = {"limit": limit}
        while True:
            doc = client.get(
                f"/aiti/collections/{VULNS}/objects/", params=params, headers=auth()
            ).json()
            collected += [o["id"] for o in doc["objects"]]
            assert ("next" in doc) == doc["more"]
            if not doc["more"]:
                break
            params["next"] = doc["next"]
        assert collected == expected, f"limit={limit}"


def test_added_after_is_exclusive(client):
    push(client, [make_object(n) for n in (1, 2, 3)])
    all_objects = client.get(f"/aiti/collections/{VULNS}/objects/", headers=auth())
    second_added = None
    # recover the second object's date_added via object-by-id headers
    response = client.get(
        f"/aiti/collections/{VULNS}/objects/{make_object(2)['id']}/", headers=auth()
    )
    second_added = response.headers["X-TAXII-Date-Added-First"]
    doc = client.get(
        f"/aiti/collections/{VULNS}/objects/",
        params={"added_after": second_added},
        headers=auth(),
    ).json()
    assert [o["id"] for o in doc["objects"]] == [make_object(3)["id"]]
    assert all_objects.json()["objects"][0]["id"] == make_object(1)["id"]


def test_match_filters(client):
    attack = {
        "type": "AI Attack-Evasion",
        "id": "exampleFGM_Resnet-50_CIFAR10",
        "created": "2022-08-11T23:39:03",
    }
    push(client, [make_object(1), attack])
    base = f"/aiti/collections/{VULNS}/objects/"
    for spelling in ("ai-attack", "AI Attack-Evasion"):
        doc = client.get(base, params={"match[type]": spelling}, headers=auth()).json()
        assert [o["id"] for o in doc["objects"]] == [attack["id"]]
    doc = client.get(base, params={"match[id]": attack["id"]}, headers=auth()).json()
    assert len(doc["objects"]) == 1
    doc = client.get(
        base, params={"match[id]": attack["id"], "match[type]": "identity"}, headers=auth()
    ).json()
    assert doc["objects"] == []  # filters are conjunctive


def test_objects_are_served_canonically(client):
    attack = {
        "type": "AI Attack-Evasion",
        "id": "exampleFGM_Resnet-50_CIFAR10",
        "created": "2022-08-11T23:39:03",
    }
    push(client, [attack])
    doc = client.get(f"/aiti/collections/{VULNS}/objects/", headers=auth()).json()
    served = doc["objects"][0]
    assert served["type"] == "ai-attack"
    assert served["attack_category"] == "evasion"


def test_object_by_id_echoes_original_spelling(client):
    attack = {
        "type": "AI Attack-Evasion",
        "id": "exampleFGM_Resnet-50_CIFAR10",
        "created": "2022-08-11T23:39:03",
    }
    push(client, [attack])
    response = client.get(
        f"/aiti/collections/{VULNS}/objects/{attack['id']}/", headers=auth()
    )
    assert response.status_code == 200
    doc = response.json()
    assert doc["more"] is False
    assert doc["objects"] == [attack]
    assert "X-TAXII-Date-Added-First" in response.headers


def test_object_by_id_absent_is_404(client):
    response = client.get(f"/aiti/collections/{VULNS}/objects/identity--missing/", headers=auth())
    assert response.status_code == 404


def test_taxii_headers_on_object_pages(client):
    push(client, [make_object(1), make_object(2)])
    response = client.get(f"/aiti/collections/{VULNS}/objects/", headers=auth())
    first = response.headers["X-TAXII-Date-Added-First"]
    last = response.headers["X-TAXII-Date-Added-Last"]
    assert first < last


def test_bad_query_parameters_are_400(client):
    base = f"/aiti/collections/{VULNS}/objects/"
    assert client.get(base, params={"limit": "zero"}, headers=auth()).status_code == 400
    assert client.get(base, params={"limit": "0"}, headers=auth()).status_code == 400
    assert client.get(base, params={"next": "abc"}, headers=auth()).status_code == 400
    assert client.get(base, params={"added_after": "yesterday"}, headers=auth()).status_code == 400


def test_latest_version_wins_on_get(client):
    original = make_object(1)
    updated = dict(original, modified="2024-03-01T00:00:00Z", name="object 1 v2")
    push(client, [original])
    push(client, [updated])
    doc = client.get(f"/aiti/collections/{VULNS}/objects/", headers=auth()).json()
    assert len(doc["objects"]) == 1
    assert doc["objects"][0]["name"] == "object 1 v2"
