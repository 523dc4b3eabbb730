"""HTTP trial-conduct service.

Each trial is an append-only JSONL event log on disk (one file per trial,
fsynced on every append) plus an in-memory snapshot rebuilt by replaying the
log. Assessments are never persisted: they are recomputed from the stored
seed on replay, which both keeps the log small and guarantees that what the
service serves is exactly what the engine computes. Mutations take a
per-trial lock and swap in a fresh immutable snapshot; reads are lock-free.

A corrupt event log fails startup rather than being skipped: for trial
conduct, refusing to run beats silently serving a partial history.
"""

from __future__ import annotations

import hashlib
import json
import os
import secrets
import sys
import threading
import datetime as _dt
from dataclasses import dataclass
from pathlib import Path

from fastapi import Body, FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from . import __version__
from .errors import ConfigFormatError, FormatError, HistoryFormatError
from .model import CohortObservation, TrialHistory
from .simulator import (
    Assessment,
    TrialConfig,
    assessment_seed,
    assessment_to_dict,
    cohort_from_dict,
    config_from_dict,
    config_to_dict,
    evaluate,
    recommendation_to_dict,
)


class ApiError(Exception):
    """Carries an HTTP status and the service's error body shape."""

    def __init__(self, status: int, code: str, message: str, field_errors=None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.field_errors = list(field_errors or [])

    def body(self) -> dict:
        return {
            "code": self.code,
            "message": self.message,
            "field_errors": self.field_errors,
        }


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat()


@dataclass(frozen=True, eq=False)
class TrialState:
    """Immutable snapshot of one trial; replaced wholesale on mutation."""

    trial_id: str
    created_at: str
    seed: int
    config: TrialConfig
    config_dict: dict
    history: TrialHistory
    cohort_times: tuple[str, ...]
    assessments: tuple[Assessment, ...]

    @property
    def status(self) -> str:
        return (
            "complete" if len(self.history) >= self.config.max_cohorts else "enrolling"
        )

    @property
    def latest(self) -> Assessment:
        return self.assessments[-1]


class TrialStore:
    """Event-sourced trial registry backed by one JSONL file per trial."""

    def __init__(self, data_dir, default_config: TrialConfig):
        self.dir = Path(data_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.default_config = default_config
        self._states: dict[str, TrialState] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()
        for path in sorted(self.dir.glob("*.jsonl")):
            state = self._replay(path)
            self._states[state.trial_id] = state
            self._locks[state.trial_id] = threading.Lock()

    # -- persistence ----------------------------------------------------------

    def _path(self, trial_id: str) -> Path:
        return self.dir / f"{trial_id}.jsonl"

    def _append(self, trial_id: str, event: dict) -> None:
        with open(self._path(trial_id), "a") as fh:
            fh.write(json.dumps(event, sort_keys=True) + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def _replay(self, path: Path) -> TrialState:
        try:
            lines = path.read_text().splitlines()
            events = [json.loads(line) for line in lines if line.strip()]
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigFormatError(f"{path}: unreadable event log: {exc}") from exc
        if not events or events[0].get("type") != "created":
            raise ConfigFormatError(f"{path}: event log does not start with creation")
        head = events[0]
        config = config_from_dict(head["config"], source=f"{path}: config")
        state = self._initial_state(
            trial_id=head["trial_id"],
            created_at=head["created_at"],
            seed=int(head["seed"]),
            config=config,
        )
        for i, event in enumerate(events[1:], start=1):
            if event.get("type") != "cohort":
                raise ConfigFormatError(f"{path}: unknown event type at line {i + 1}")
            cohort = CohortObservation(
                dose_index=int(event["cohort"]["dose_index"]),
                n_patients=int(event["cohort"]["n_patients"]),
                dlt_count=int(event["cohort"]["dlt_count"]),
                ndltae_count=int(event["cohort"]["ndltae_count"]),
            )
            state = self._advance(state, cohort, event["posted_at"])
        return state

    # -- state transitions ----------------------------------------------------

    def _initial_state(self, trial_id, created_at, seed, config) -> TrialState:
        first = evaluate(TrialHistory(), config, assessment_seed(seed, 0))
        return TrialState(
            trial_id=trial_id,
            created_at=created_at,
            seed=seed,
            config=config,
            config_dict=config_to_dict(config),
            history=TrialHistory(),
            cohort_times=(),
            assessments=(first,),
        )

    def _advance(
        self, state: TrialState, cohort: CohortObservation, posted_at: str
    ) -> TrialState:
        history = TrialHistory(state.history.cohorts + (cohort,))
        assessment = evaluate(
            history, state.config, assessment_seed(state.seed, len(history))
        )
        return TrialState(
            trial_id=state.trial_id,
            created_at=state.created_at,
            seed=state.seed,
            config=state.config,
            config_dict=state.config_dict,
            history=history,
            cohort_times=state.cohort_times + (posted_at,),
            assessments=state.assessments + (assessment,),
        )

    # -- public operations ----------------------------------------------------

    def get(self, trial_id: str) -> TrialState:
        state = self._states.get(trial_id)
        if state is None:
            raise ApiError(404, "not_found", f"no trial with id {trial_id!r}")
        return state

    def list(self) -> list[TrialState]:
        states = list(self._states.values())
        states.sort(key=lambda s: (s.created_at, s.trial_id))
        return states

    def create(self, config_obj, idempotency_key, seed) -> tuple[TrialState, bool]:
        """Returns (state, created); created False on an idempotent replay."""
        if config_obj is None:
            config = self.default_config
        else:
            config = config_from_dict(config_obj, source="config")
        config_dict = config_to_dict(config)
        if idempotency_key is not None:
            digest = hashlib.sha256(
                f"idem|{idempotency_key}".encode()
            ).hexdigest()
            trial_id = "t" + digest[:16]
        else:
            trial_id = "t" + hashlib.sha256(secrets.token_bytes(32)).hexdigest()[:16]
        with self._registry_lock:
            existing = self._states.get(trial_id)
            if existing is not None:
                same_config = existing.config_dict == config_dict
                same_seed = seed is None or seed == existing.seed
                if same_config and same_seed:
                    return existing, False
                raise ApiError(
                    409,
                    "idempotency_conflict",
                    "idempotency key already used with a different config or seed",
                )
            if seed is None:
                seed = secrets.randbelow(2**63)
            created_at = _now()
            self._append(
                trial_id,
                {
                    "type": "created",
                    "trial_id": trial_id,
                    "created_at": created_at,
                    "seed": seed,
                    "config": config_dict,
                },
            )
            state = self._initial_state(trial_id, created_at, seed, config)
            self._states[trial_id] = state
            self._locks[trial_id] = threading.Lock()
            return state, True

    def post_cohort(self, trial_id: str, payload: dict) -> TrialState:
        lock = self._locks.get(trial_id)
        if lock is None:
            raise ApiError(404, "not_found", f"no trial with id {trial_id!r}")
        with lock:
            state = self.get(trial_id)
            if state.status == "complete":
                raise ApiError(
                    409,
                    "trial_complete",
                    f"trial already holds {len(state.history)} cohorts; "
                    "no further cohorts may be posted",
                )
            cohort, override = _parse_cohort_payload(payload, state.config)
            expected = state.latest.recommendation.dose_index
            if cohort.dose_index != expected and not override:
                raise ApiError(
                    409,
                    "dose_mismatch",
                    f"cohort dosed at index {cohort.dose_index} but the current "
                    f"recommendation is index {expected} "
                    f"(dose {state.config.grid.doses[expected]}); "
                    "pass override_dose=true to record a protocol deviation",
                )
            posted_at = _now()
            self._append(
                trial_id,
                {
                    "type": "cohort",
                    "posted_at": posted_at,
                    "cohort": {
                        "dose_index": cohort.dose_index,
                        "n_patients": cohort.n_patients,
                        "dlt_count": cohort.dlt_count,
                        "ndltae_count": cohort.ndltae_count,
                    },
                },
            )
            new_state = self._advance(state, cohort, posted_at)
            self._states[trial_id] = new_state
            return new_state

    def whatif(self, trial_id: str, payload: dict) -> Assessment:
        """Hypothetical next-cohort assessment; never persisted.

        Uses exactly the seed the real posting would use, so a what-if
        matches the assessment produced by actually posting that cohort.
        """
        state = self.get(trial_id)
        if state.status == "complete":
            raise ApiError(
                409, "trial_complete", "trial is complete; nothing left to ask"
            )
        cohort, _ = _parse_cohort_payload(payload, state.config)
        history = TrialHistory(state.history.cohorts + (cohort,))
        return evaluate(
            history, state.config, assessment_seed(state.seed, len(history))
        )


def _parse_cohort_payload(payload, config: TrialConfig):
    if not isinstance(payload, dict):
        raise ApiError(422, "validation_error", "request body must be a JSON object")
    payload = dict(payload)
    override = payload.pop("override_dose", False)
    if not isinstance(override, bool):
        raise ApiError(
            422, "validation_error", "invalid cohort",
            ["'override_dose' must be a boolean"],
        )
    try:
        cohort = cohort_from_dict(payload, config.grid, source="cohort")
    except HistoryFormatError as exc:
        raise ApiError(422, "validation_error", "invalid cohort", exc.items) from exc
    return cohort, override


def _state_summary(state: TrialState) -> dict:
    rec = state.latest.recommendation
    return {
        "id": state.trial_id,
        "created_at": state.created_at,
        "status": state.status,
        "n_cohorts": len(state.history),
        "recommended_dose_index": rec.dose_index,
        "recommended_dose": state.config.grid.doses[rec.dose_index],
    }


def _state_detail(state: TrialState) -> dict:
    grid = state.config.grid
    cohorts = []
    for i, c in enumerate(state.history.cohorts):
        cohorts.append(
            {
                "dose_index": c.dose_index,
                "dose": grid.doses[c.dose_index],
                "n_patients": c.n_patients,
                "dlt_count": c.dlt_count,
                "ndltae_count": c.ndltae_count,
                "posted_at": state.cohort_times[i],
                "recommendation": recommendation_to_dict(
                    state.assessments[i + 1].recommendation, grid
                ),
            }
        )
    out = {
        "id": state.trial_id,
        "created_at": state.created_at,
        "status": state.status,
        "seed": state.seed,
        "config": state.config_dict,
        "initial_recommendation": recommendation_to_dict(
            state.assessments[0].recommendation, grid
        ),
        "cohorts": cohorts,
        "current": assessment_to_dict(state.latest, grid),
    }
    if state.status == "complete":
        rec = state.latest.recommendation
        out["declared_mtd_index"] = rec.dose_index
        out["declared_mtd_dose"] = grid.doses[rec.dose_index]
    return out


def create_app(
    data_dir,
    token: str | None = None,
    default_config: TrialConfig | None = None,
    ui_dir=None,
) -> FastAPI:
    """Build the FastAPI application around one TrialStore."""
    store = TrialStore(data_dir, default_config or TrialConfig())
    app = FastAPI(title="bblrm trial service", version=__version__)
    app.state.store = store

    @app.exception_handler(ApiError)
    async def _api_error(_req: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status, content=exc.body())

    @app.exception_handler(RequestValidationError)
    async def _validation_error(_req: Request, exc: RequestValidationError):
        errors = [
            f"{'.'.join(str(p) for p in e.get('loc', []))}: {e.get('msg', 'invalid')}"
            for e in exc.errors()
        ]
        return JSONResponse(
            status_code=422,
            content={
                "code": "validation_error",
                "message": "request body failed validation",
                "field_errors": errors,
            },
        )

    @app.middleware("http")
    async def _auth(request: Request, call_next):
        path = request.url.path
        if token and path.startswith("/v1") and path != "/v1/healthz":
            supplied = request.headers.get("authorization", "")
            if supplied != f"Bearer {token}":
                return JSONResponse(
                    status_code=401,
                    content={
                        "code": "unauthorized",
                        "message": "missing or invalid bearer token",
                        "field_errors": [],
                    },
                )
        return await call_next(request)

    @app.get("/v1/healthz")
    def healthz():
        return {"status": "ok", "version": __version__}

    @app.post("/v1/trials", status_code=201)
    def create_trial(payload: dict | None = Body(default=None)):
        payload = payload or {}
        unknown = sorted(set(payload) - {"config", "idempotency_key", "seed"})
        field_errors = [f"unknown key {k!r}" for k in unknown]
        key = payload.get("idempotency_key")
        if key is not None and (not isinstance(key, str) or not key):
            field_errors.append("'idempotency_key' must be a non-empty string")
        seed = payload.get("seed")
        if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int) or seed < 0):
            field_errors.append("'seed' must be a non-negative integer")
        if field_errors:
            raise ApiError(422, "validation_error", "invalid request", field_errors)
        try:
            state, created = store.create(payload.get("config"), key, seed)
        except ConfigFormatError as exc:
            raise ApiError(
                422, "validation_error", "invalid config", exc.items or [str(exc)]
            ) from exc
        return JSONResponse(
            status_code=201 if created else 200, content=_state_detail(state)
        )

    @app.get("/v1/trials")
    def list_trials():
        return {"trials": [_state_summary(s) for s in store.list()]}

    @app.get("/v1/trials/{trial_id}")
    def get_trial(trial_id: str):
        return _state_detail(store.get(trial_id))

    @app.post("/v1/trials/{trial_id}/cohorts", status_code=201)
    def post_cohort(trial_id: str, payload: dict = Body(...)):
        state = store.post_cohort(trial_id, payload)
        return _state_detail(state)

    @app.post("/v1/trials/{trial_id}/whatif")
    def whatif(trial_id: str, payload: dict = Body(...)):
        state = store.get(trial_id)
        assessment = store.whatif(trial_id, payload)
        return {
            "trial_id": trial_id,
            "hypothetical": True,
            "assessment": assessment_to_dict(assessment, state.config.grid),
        }

    @app.get("/v1/trials/{trial_id}/posterior")
    def posterior(trial_id: str):
        state = store.get(trial_id)
        latest = state.latest
        return {
            "trial_id": trial_id,
            "n_cohorts": len(state.history),
            "doses": list(state.config.grid.doses),
            "bands": assessment_to_dict(latest, state.config.grid)["bands"],
            "interval_probs": recommendation_to_dict(
                latest.recommendation, state.config.grid
            )["interval_probs"],
            "acceptance_rate": latest.acceptance_rate,
        }

    if ui_dir:
        ui_path = Path(ui_dir)
        if ui_path.is_dir():
            from fastapi.staticfiles import StaticFiles

            app.mount("/", StaticFiles(directory=str(ui_path), html=True), name="ui")
    return app


def serve(host, port, data_dir, token, default_config, ui_dir=None) -> int:
    """Run the service under uvicorn; returns a process exit code."""
    import uvicorn

    try:
        app = create_app(
            data_dir, token=token, default_config=default_config, ui_dir=ui_dir
        )
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        uvicorn.run(app, host=host, port=port, log_level="info")
    except SystemExit as exc:
        return int(exc.code or 1)
    except OSError as exc:
        print(f"error: cannot bind {host}:{port}: {exc}", file=sys.stderr)
        return 1
    return 0
