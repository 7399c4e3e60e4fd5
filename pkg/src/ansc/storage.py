"""File formats and the append-only score history store.

Formats are the interop contract between the CLI, service, simulator, and
console:

* fleet: one JSON document (strict keys, integer capacities)
* incidents: newline-delimited JSON with RFC 3339 timestamps
* scorecards: JSON array with exactly the documented field names
* thresholds / budget: small JSON objects
* assignments: newline-delimited ``{scope_id, date, color}``
* history: per-scope newline-delimited scorecard records under a root dir

``es`` is serialized as ``null`` for the no-demand +inf sentinel, since
strict JSON has no Infinity literal.
"""

from __future__ import annotations

import json
import math
from datetime import date, datetime, timezone
from pathlib import Path
from typing import Any, Iterable, Mapping
from urllib.parse import quote, unquote

from .calibration import BudgetConfig, Thresholds
from .errors import DomainError, SchemaError
from .fabric import (
    CapacityElement,
    ClosLayer,
    Datacenter,
    FabricTopology,
    validate,
)
from .hazard import IncidentRecord
from .scoring import Color, ScoreCard, ScoreSeries, SeriesPoint

_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)


# ---------------------------------------------------------------------------
# timestamps
# ---------------------------------------------------------------------------

def format_timestamp(dt: datetime) -> str:
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")


def parse_timestamp(raw: str, path: str = "") -> datetime:
    if not isinstance(raw, str):
        raise SchemaError(f"expected RFC 3339 timestamp string, got {raw!r}", path)
    text = raw[:-1] + "+00:00" if raw.endswith("Z") else raw
    try:
        dt = datetime.fromisoformat(text)
    except ValueError:
        raise SchemaError(f"invalid RFC 3339 timestamp {raw!r}", path) from None
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


# ---------------------------------------------------------------------------
# strict object decoding
# ---------------------------------------------------------------------------

def _require_keys(obj: Any, required: set[str], optional: set[str], path: str) -> dict:
    if not isinstance(obj, dict):
        raise SchemaError(f"expected an object, got {type(obj).__name__}", path)
    unknown = set(obj) - required - optional
    if unknown:
        raise SchemaError(f"unknown keys {sorted(unknown)}", path)
    missing = required - set(obj)
    if missing:
        raise SchemaError(f"missing keys {sorted(missing)}", path)
    return obj


def _require_str(obj: Mapping, key: str, path: str) -> str:
    value = obj[key]
    if not isinstance(value, str) or not value:
        raise SchemaError(f"{key} must be a non-empty string, got {value!r}", path)
    return value


def _require_int(obj: Mapping, key: str, path: str) -> int:
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(
            f"{key} must be an integer number of capacity units, got {value!r}", path
        )
    return value


def _require_prob(obj: Mapping, key: str, path: str) -> float:
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"{key} must be a number in [0, 1], got {value!r}", path)
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise SchemaError(f"{key} must be in [0, 1], got {value}", path)
    return value


# ---------------------------------------------------------------------------
# fleet
# ---------------------------------------------------------------------------

def fleet_to_dict(fleet: FabricTopology) -> dict:
    return {
        "regions": list(fleet.regions),
        "datacenters": [
            {
                "id": dc.id,
                "region_id": dc.region_id,
                "layers": [
                    {
                        "id": layer.id,
                        "tier": layer.tier.value,
                        "demand_forecast": layer.demand_forecast,
                        "elements": [
                            {
                                "id": e.id,
                                "kind": e.kind.value,
                                "capacity": e.capacity,
                                "state": e.state.value,
                            }
                            for e in layer.elements
                        ],
                    }
                    for layer in dc.layers
                ],
            }
            for dc in fleet.datacenters
        ],
        "created_at": format_timestamp(fleet.created_at),
    }


def fleet_from_dict(doc: Any) -> FabricTopology:
    top = _require_keys(doc, {"regions", "datacenters"}, {"created_at"}, "/")
    regions = top["regions"]
    if not isinstance(regions, list) or not all(isinstance(r, str) for r in regions):
        raise SchemaError("regions must be an array of strings", "/regions")
    if not regions:
        raise SchemaError("regions must be non-empty", "/regions")
    if not isinstance(top["datacenters"], list):
        raise SchemaError("datacenters must be an array", "/datacenters")

    datacenters = []
    for d, dc_doc in enumerate(top["datacenters"]):
        dc_path = f"/datacenters/{d}"
        dc_obj = _require_keys(dc_doc, {"id", "region_id", "layers"}, set(), dc_path)
        dc_id = _require_str(dc_obj, "id", dc_path)
        layers = []
        if not isinstance(dc_obj["layers"], list) or not dc_obj["layers"]:
            raise SchemaError("layers must be a non-empty array", f"{dc_path}/layers")
        for l, layer_doc in enumerate(dc_obj["layers"]):
            layer_path = f"{dc_path}/layers/{l}"
            layer_obj = _require_keys(
                layer_doc, {"id", "tier", "demand_forecast", "elements"}, set(), layer_path
            )
            if not isinstance(layer_obj["elements"], list) or not layer_obj["elements"]:
                raise SchemaError("elements must be a non-empty array", f"{layer_path}/elements")
            elements = []
            for e, elem_doc in enumerate(layer_obj["elements"]):
                elem_path = f"{layer_path}/elements/{e}"
                elem_obj = _require_keys(
                    elem_doc, {"id", "kind", "capacity", "state"}, set(), elem_path
                )
                elem_id = _require_str(elem_obj, "id", elem_path)
                capacity = _require_int(elem_obj, "capacity", f"{elem_path} (element {elem_id!r})")
                if capacity < 0:
                    raise SchemaError(f"capacity must be >= 0, got {capacity}", elem_path)
                try:
                    elements.append(
                        CapacityElement(
                            id=elem_id,
                            kind=elem_obj["kind"],
                            capacity=capacity,
                            state=elem_obj["state"],
                        )
                    )
                except ValueError as exc:
                    raise SchemaError(str(exc), elem_path) from None
            try:
                layers.append(
                    ClosLayer(
                        id=_require_str(layer_obj, "id", layer_path),
                        tier=layer_obj["tier"],
                        elements=tuple(elements),
                        demand_forecast=_require_int(layer_obj, "demand_forecast", layer_path),
                    )
                )
            except ValueError as exc:
                raise SchemaError(str(exc), layer_path) from None
        datacenters.append(
            Datacenter(id=dc_id, region_id=_require_str(dc_obj, "region_id", dc_path), layers=tuple(layers))
        )

    created_at = parse_timestamp(top["created_at"], "/created_at") if "created_at" in top else _EPOCH
    fleet = FabricTopology(regions=tuple(regions), datacenters=tuple(datacenters), created_at=created_at)
    violations = validate(fleet)
    if violations:
        first = violations[0]
        raise SchemaError(f"invalid topology: {first.message}", first.path)
    return fleet


def save_fleet(fleet: FabricTopology, path: str | Path) -> None:
    _write_json(path, fleet_to_dict(fleet))


def load_fleet(path: str | Path) -> FabricTopology:
    return fleet_from_dict(_read_json(path))


# ---------------------------------------------------------------------------
# incidents
# ---------------------------------------------------------------------------

def incident_to_dict(record: IncidentRecord) -> dict:
    return {
        "element_id": record.element_id,
        "start": format_timestamp(record.start),
        "end": format_timestamp(record.end),
        "cause": record.cause,
    }


def incident_from_dict(doc: Any, path: str = "") -> IncidentRecord:
    obj = _require_keys(doc, {"element_id", "start", "end"}, {"cause"}, path)
    try:
        return IncidentRecord(
            element_id=_require_str(obj, "element_id", path),
            start=parse_timestamp(obj["start"], f"{path}/start"),
            end=parse_timestamp(obj["end"], f"{path}/end"),
            cause=obj.get("cause", ""),
        )
    except DomainError as exc:
        raise SchemaError(str(exc), path) from None


def save_incidents(records: Iterable[IncidentRecord], path: str | Path) -> None:
    _write_ndjson(path, (incident_to_dict(r) for r in records))


def load_incidents(path: str | Path) -> list[IncidentRecord]:
    return [
        incident_from_dict(doc, f"line {i}")
        for i, doc in enumerate(_read_ndjson(path), start=1)
    ]


# ---------------------------------------------------------------------------
# scorecards
# ---------------------------------------------------------------------------

_CARD_KEYS = {"scope", "scope_id", "es", "p_fail", "raw", "persisted", "color", "at"}


def scorecard_to_dict(card: ScoreCard) -> dict:
    return {
        "scope": card.scope.value,
        "scope_id": card.scope_id,
        "es": None if math.isinf(card.es) else card.es,
        "p_fail": card.p_fail,
        "raw": card.raw,
        "persisted": card.persisted,
        "color": card.color.value,
        "at": format_timestamp(card.at),
    }


def scorecard_from_dict(doc: Any, path: str = "") -> ScoreCard:
    obj = _require_keys(doc, _CARD_KEYS, set(), path)
    es_raw = obj["es"]
    if es_raw is None:
        es = math.inf
    elif isinstance(es_raw, bool) or not isinstance(es_raw, (int, float)):
        raise SchemaError(f"es must be a number or null, got {es_raw!r}", path)
    else:
        es = float(es_raw)
    try:
        return ScoreCard(
            scope=obj["scope"],
            scope_id=_require_str(obj, "scope_id", path),
            es=es,
            p_fail=_require_prob(obj, "p_fail", path),
            raw=_require_prob(obj, "raw", path),
            persisted=_require_prob(obj, "persisted", path),
            color=obj["color"],
            at=parse_timestamp(obj["at"], f"{path}/at"),
        )
    except ValueError as exc:
        raise SchemaError(str(exc), path) from None


def save_scorecards(cards: Iterable[ScoreCard], path: str | Path) -> None:
    _write_json(path, [scorecard_to_dict(c) for c in cards])


def load_scorecards(path: str | Path) -> list[ScoreCard]:
    doc = _read_json(path)
    if not isinstance(doc, list):
        raise SchemaError("scorecard file must be a JSON array", "/")
    return [scorecard_from_dict(item, f"/{i}") for i, item in enumerate(doc)]


# ---------------------------------------------------------------------------
# thresholds, budget
# ---------------------------------------------------------------------------

def thresholds_to_dict(thresholds: Thresholds) -> dict:
    return {
        "t_red": thresholds.t_red,
        "t_orange": thresholds.t_orange,
        "t_amber": thresholds.t_amber,
        "calibrated_at": format_timestamp(thresholds.calibrated_at),
        "population": thresholds.population.value,
    }


def thresholds_from_dict(doc: Any, path: str = "") -> Thresholds:
    obj = _require_keys(
        doc, {"t_red", "t_orange", "t_amber", "calibrated_at", "population"}, set(), path
    )
    try:
        return Thresholds(
            t_red=_require_prob(obj, "t_red", path),
            t_orange=_require_prob(obj, "t_orange", path),
            t_amber=_require_prob(obj, "t_amber", path),
            calibrated_at=parse_timestamp(obj["calibrated_at"], f"{path}/calibrated_at"),
            population=obj["population"],
        )
    except ValueError as exc:
        raise SchemaError(str(exc), path) from None


def save_thresholds(thresholds: Thresholds, path: str | Path) -> None:
    _write_json(path, thresholds_to_dict(thresholds))


def load_thresholds(path: str | Path) -> Thresholds:
    return thresholds_from_dict(_read_json(path))


_BUDGET_KEYS = {
    "red_frac", "orange_frac", "amber_frac", "tolerance", "score_floor",
    "t_pers", "horizon_years", "beta", "kappa",
}


def budget_to_dict(budget: BudgetConfig) -> dict:
    return {key: getattr(budget, key) for key in sorted(_BUDGET_KEYS)}


def budget_from_dict(doc: Any, path: str = "") -> BudgetConfig:
    obj = _require_keys(doc, set(), _BUDGET_KEYS, path)
    for key, value in obj.items():
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise SchemaError(f"{key} must be a number, got {value!r}", path)
    try:
        return BudgetConfig(**{k: float(v) for k, v in obj.items()})
    except ValueError as exc:
        raise SchemaError(str(exc), path) from None


def save_budget(budget: BudgetConfig, path: str | Path) -> None:
    _write_json(path, budget_to_dict(budget))


def load_budget(path: str | Path) -> BudgetConfig:
    return budget_from_dict(_read_json(path))


# ---------------------------------------------------------------------------
# color assignments (audit input)
# ---------------------------------------------------------------------------

def save_assignments(
    assignments: Iterable[tuple[str, date, Color]], path: str | Path
) -> None:
    _write_ndjson(
        path,
        (
            {"scope_id": sid, "date": day.isoformat(), "color": Color(color).value}
            for sid, day, color in assignments
        ),
    )


def load_assignments(path: str | Path) -> list[tuple[str, date, Color]]:
    out = []
    for i, doc in enumerate(_read_ndjson(path), start=1):
        where = f"line {i}"
        obj = _require_keys(doc, {"scope_id", "date", "color"}, set(), where)
        try:
            day = date.fromisoformat(obj["date"])
            color = Color(obj["color"])
        except ValueError as exc:
            raise SchemaError(str(exc), where) from None
        out.append((_require_str(obj, "scope_id", where), day, color))
    return out


# ---------------------------------------------------------------------------
# history store
# ---------------------------------------------------------------------------

class HistoryStore:
    """Append-only per-scope score history under a root directory.

    Appends accumulate in memory and land on disk at :meth:`flush`; reads
    always reflect every append made in this process.  Single writer per
    store; out-of-order appends are rejected.  A ``None`` root keeps the
    history in memory only (demo mode).
    """

    def __init__(self, root: str | Path | None) -> None:
        self.root = Path(root) if root is not None else None
        if self.root is not None:
            self.root.mkdir(parents=True, exist_ok=True)
        self._points: dict[str, list[SeriesPoint]] = {}
        self._pending: dict[str, list[dict]] = {}
        self._loaded: set[str] = set()

    def _file_for(self, scope_id: str) -> Path:
        assert self.root is not None
        parts = [quote(part, safe="") for part in scope_id.split("/")]
        parts[-1] += ".ndjson"
        return self.root.joinpath(*parts)

    def _ensure_loaded(self, scope_id: str) -> list[SeriesPoint]:
        if scope_id not in self._loaded:
            self._loaded.add(scope_id)
            existing = self._points.setdefault(scope_id, [])
            path = self._file_for(scope_id) if self.root is not None else None
            if path is not None and path.exists():
                disk = [
                    scorecard_from_dict(doc, f"{path.name} line {i}")
                    for i, doc in enumerate(_read_ndjson(path), start=1)
                ]
                points = [SeriesPoint(at=c.at, persisted=c.persisted, color=c.color) for c in disk]
                existing[:0] = points
        return self._points.setdefault(scope_id, [])

    def append_scores(self, cards: Iterable[ScoreCard]) -> None:
        for card in cards:
            points = self._ensure_loaded(card.scope_id)
            if points and card.at <= points[-1].at:
                raise DomainError(
                    f"out-of-order append for {card.scope_id!r}: "
                    f"{card.at.isoformat()} <= {points[-1].at.isoformat()}"
                )
            points.append(SeriesPoint(at=card.at, persisted=card.persisted, color=card.color))
            self._pending.setdefault(card.scope_id, []).append(scorecard_to_dict(card))

    def read_series(self, scope_id: str, window: int | None = None) -> ScoreSeries:
        """Trailing ``window`` points in timestamp order; unknown scopes are empty."""
        points = self._ensure_loaded(scope_id)
        if window is not None:
            if window < 0:
                raise DomainError(f"window must be >= 0, got {window}")
            points = points[len(points) - min(window, len(points)):]
        return ScoreSeries(scope_id=scope_id, points=tuple(points))

    def scope_ids(self) -> list[str]:
        ids = set(self._points)
        if self.root is not None and self.root.exists():
            for path in self.root.rglob("*.ndjson"):
                rel = path.relative_to(self.root)
                parts = [unquote(p) for p in rel.parts]
                parts[-1] = parts[-1][: -len(".ndjson")]
                ids.add("/".join(parts))
        return sorted(ids)

    def flush(self) -> None:
        if self.root is None:
            self._pending.clear()
            return
        for scope_id, docs in self._pending.items():
            path = self._file_for(scope_id)
            path.parent.mkdir(parents=True, exist_ok=True)
            with path.open("a", encoding="utf-8") as fh:
                for doc in docs:
                    fh.write(json.dumps(doc, sort_keys=True) + "\n")
        self._pending.clear()

    def close(self) -> None:
        self.flush()

    def __enter__(self) -> "HistoryStore":
        return self

    def __exit__(self, *exc: object) -> None:
        self.close()


# ---------------------------------------------------------------------------
# raw IO
# ---------------------------------------------------------------------------

def _read_json(path: str | Path) -> Any:
    path = Path(path)
    if not path.exists():
        raise SchemaError("file does not exist", str(path))
    try:
        with path.open("r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"malformed JSON: {exc}", str(path)) from None


def _write_json(path: str | Path, doc: Any) -> None:
    path = Path(path)
    if path.parent != Path(""):
        path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(doc, indent=2, sort_keys=True, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8")


def _read_ndjson(path: str | Path) -> list[Any]:
    path = Path(path)
    if not path.exists():
        raise SchemaError("file does not exist", str(path))
    docs = []
    with path.open("r", encoding="utf-8") as fh:
        for i, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                docs.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise SchemaError(f"malformed JSON: {exc}", f"{path} line {i}") from None
    return docs


def _write_ndjson(path: str | Path, docs: Iterable[Any]) -> None:
    path = Path(path)
    if path.parent != Path(""):
        path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(json.dumps(doc, sort_keys=True, allow_nan=False) + "\n")
