"""HTTP API over scores, heatmaps, history, calibration, and what-ifs.

Consistency model: every tick produces a complete :class:`ServiceState`
which is swapped in atomically.  Handlers read the state reference once, so
concurrent reads and what-if evaluations always see a single tick's
snapshot.  ``POST /v1/sim/tick`` is the only mutator and only exists in
demo mode.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, replace
from datetime import datetime
from typing import Mapping

from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse

from .calibration import BudgetConfig, Thresholds
from .errors import AnscError, DomainError, NotFoundError, SchemaError
from .fabric import FabricTopology
from .hazard import ConditionWeights, ElementHazard, IncidentRecord
from .scoring import (
    PersistenceState,
    Scope,
    ScoreCard,
    ScoreSeries,
    SeriesPoint,
    map_color,
    posture_and_movement,
)
from .simulator import (
    SIM_EPOCH,
    ScenarioConfig,
    ScenarioEngine,
    TickState,
    export_heatmap,
    heatmap_to_json,
)
from .storage import HistoryStore, format_timestamp, scorecard_to_dict, thresholds_to_dict
from .whatif import action_from_dict, evaluate


@dataclass(frozen=True)
class ServiceState:
    """One tick's consistent snapshot: fleet, hazards, thresholds, cards."""

    fleet: FabricTopology
    hazards: Mapping[str, ElementHazard]
    thresholds_dc: Thresholds
    thresholds_region: Thresholds
    cards: tuple[ScoreCard, ...]
    persistence: Mapping[str, PersistenceState]
    budget: BudgetConfig
    weights: ConditionWeights
    at: datetime


class ServiceController:
    """Holds the current snapshot; demo mode can advance the simulation."""

    def __init__(
        self,
        state: ServiceState,
        *,
        engine: ScenarioEngine | None = None,
        history: HistoryStore | None = None,
    ) -> None:
        self._state = state
        self._engine = engine
        self._history = history
        self._tick_lock = threading.Lock()
        if history is not None:
            self._seed_history(state)

    def _seed_history(self, state: ServiceState) -> None:
        try:
            self._history.append_scores(state.cards)  # type: ignore[union-attr]
            self._history.flush()  # type: ignore[union-attr]
        except DomainError:
            pass  # snapshot already recorded for this tick

    @property
    def state(self) -> ServiceState:
        return self._state

    @property
    def demo(self) -> bool:
        return self._engine is not None

    @property
    def history(self) -> HistoryStore | None:
        return self._history

    def tick(self) -> ServiceState:
        if self._engine is None:
            raise DomainError("tick is only available in demo mode")
        if not self._tick_lock.acquire(blocking=False):
            raise TickInProgress()
        try:
            tick = self._engine.advance()
            state = state_from_engine(self._engine, tick, self._state.budget, self._state.weights)
            if self._history is not None:
                self._history.append_scores(tick.cards)
                self._history.flush()
            self._state = state
            return state
        finally:
            self._tick_lock.release()


class TickInProgress(AnscError):
    pass


def state_from_engine(
    engine: ScenarioEngine,
    tick: TickState,
    budget: BudgetConfig,
    weights: ConditionWeights,
) -> ServiceState:
    return ServiceState(
        fleet=engine.fleet_state(),
        hazards=engine.hazards(),
        thresholds_dc=tick.thresholds_dc,
        thresholds_region=tick.thresholds_region,
        cards=tick.cards,
        persistence=engine.persistence_states(),
        budget=budget,
        weights=weights,
        at=tick.at,
    )


def build_state(
    fleet: FabricTopology,
    incidents: list[IncidentRecord],
    budget: BudgetConfig,
    *,
    at: datetime = SIM_EPOCH,
    weights: ConditionWeights = ConditionWeights(),
    thresholds: Thresholds | None = None,
) -> ServiceState:
    """Score a static snapshot once (file mode).

    When explicit thresholds are supplied they replace the self-calibrated
    ones and all colors are remapped against them.
    """
    config = ScenarioConfig(duration_days=1, budget=budget)
    engine = ScenarioEngine(fleet, incidents, config, start=at, weights=weights)
    tick = engine.advance()
    state = state_from_engine(engine, tick, budget, weights)
    if thresholds is not None:
        cards = tuple(
            replace(card, color=map_color(card.persisted, thresholds)) for card in state.cards
        )
        state = replace(state, cards=cards, thresholds_dc=thresholds, thresholds_region=thresholds)
    return state


def _error(status: int, message: str, path: str = "") -> JSONResponse:
    body: dict = {"error": message}
    if path:
        body["path"] = path
    return JSONResponse(status_code=status, content=body)


def _series_payload(series: ScoreSeries) -> dict:
    return {
        "scope_id": series.scope_id,
        "points": [
            {"at": format_timestamp(p.at), "persisted": p.persisted, "color": p.color.value}
            for p in series.points
        ],
    }


def create_app(
    controller: ServiceController,
    *,
    cors_origin: str | None = None,
) -> FastAPI:
    app = FastAPI(title="ansc", version="0.1.0", docs_url=None, redoc_url=None)
    app.state.controller = controller

    if cors_origin:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware,
            allow_origins=[cors_origin],
            allow_methods=["*"],
            allow_headers=["*"],
        )

    @app.exception_handler(AnscError)
    async def _handle_ansc_error(request: Request, exc: AnscError):
        if isinstance(exc, NotFoundError):
            return _error(404, str(exc))
        if isinstance(exc, TickInProgress):
            return _error(409, "a tick is already in progress")
        if isinstance(exc, SchemaError):
            return _error(400, exc.reason, exc.path)
        return _error(400, str(exc))

    @app.get("/v1/fleet/scores")
    def fleet_scores():
        state = controller.state
        return [scorecard_to_dict(card) for card in state.cards]

    @app.get("/v1/regions/{region}/heatmap")
    def region_heatmap(region: str):
        state = controller.state
        if region not in state.fleet.regions:
            raise NotFoundError(f"unknown region {region!r}")
        dc_cards = [
            card
            for card in state.cards
            if card.scope is Scope.DATACENTER and card.scope_id.split("/", 1)[0] == region
        ]
        rows = heatmap_to_json(export_heatmap(dc_cards))
        return rows[0] if rows else {"region": region, "cells": []}

    @app.get("/v1/datacenters/{dc}/scorecard")
    def dc_scorecard(dc: str):
        state = controller.state
        dc_obj = state.fleet.datacenter(dc)  # 404 when unknown
        dc_scope = f"{dc_obj.region_id}/{dc}"
        dc_card = next(
            card for card in state.cards
            if card.scope is Scope.DATACENTER and card.scope_id == dc_scope
        )
        layers = [
            card for card in state.cards
            if card.scope is Scope.LAYER and card.scope_id.startswith(dc_scope + "/")
        ]
        return {
            "datacenter": scorecard_to_dict(dc_card),
            "layers": [scorecard_to_dict(card) for card in layers],
        }

    @app.get("/v1/datacenters/{dc}/history")
    def dc_history(dc: str, window: int = Query(default=30, ge=2)):
        state = controller.state
        dc_obj = state.fleet.datacenter(dc)
        scope_id = f"{dc_obj.region_id}/{dc}"
        store = controller.history
        if store is not None:
            series = store.read_series(scope_id, window)
        else:
            card = next(
                (c for c in state.cards if c.scope is Scope.DATACENTER and c.scope_id == scope_id),
                None,
            )
            points = (
                (SeriesPoint(at=card.at, persisted=card.persisted, color=card.color),)
                if card is not None
                else ()
            )
            series = ScoreSeries(scope_id=scope_id, points=points)
        payload = _series_payload(series)
        if len(series.points) >= 2:
            ceiling, movement = posture_and_movement(series, min(window, len(series.points)))
            payload.update({"ceiling": ceiling, "movement": movement})
        else:
            payload.update({"ceiling": None, "movement": None})
        return payload

    @app.get("/v1/calibration/thresholds")
    def calibration_thresholds(population: str = Query(default="datacenter")):
        state = controller.state
        if population == "datacenter":
            return thresholds_to_dict(state.thresholds_dc)
        if population == "region":
            return thresholds_to_dict(state.thresholds_region)
        raise SchemaError("population must be 'datacenter' or 'region'", "population")

    @app.post("/v1/whatif")
    async def whatif(request: Request):
        state = controller.state
        body = await request.json()
        if not isinstance(body, list):
            raise SchemaError("what-if body must be a JSON array of actions", "/")
        actions = [action_from_dict(doc, f"/{i}") for i, doc in enumerate(body)]
        result = evaluate(
            state.fleet,
            state.hazards,
            state.thresholds_dc,
            actions,
            budget=state.budget,
            weights=state.weights,
            persistence=state.persistence,
            region_thresholds=state.thresholds_region,
            at=state.at,
        )
        return {
            "before": [scorecard_to_dict(card) for card in result.before],
            "after": [scorecard_to_dict(card) for card in result.after],
            "safe_to_remove": result.safe_to_remove,
        }

    @app.post("/v1/sim/tick")
    def sim_tick():
        if not controller.demo:
            return _error(403, "tick is only available in demo mode")
        state = controller.tick()
        return {"at": format_timestamp(state.at)}

    return app
