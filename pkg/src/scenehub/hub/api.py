"""HTTP surface of the hub.

All request and response bodies are protocol envelopes or plain documented
JSON. The console (or any client) mutates state only through POST
/api/v1/messages and POST /api/v1/missions; everything else is a consistent
read of the event-sourced state.
"""

from __future__ import annotations

from fastapi import FastAPI, Query, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .. import protocol
from ..geo import GeoPoint
from .core import Hub, MissionError, NoIdleAgentsError, RejectedMessage


def create_app(hub: Hub) -> FastAPI:
    app = FastAPI(title="incident scene hub", version="1")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.post("/api/v1/messages", status_code=202)
    async def post_message(request: Request):
        raw = await request.body()
        try:
            env = protocol.decode(raw)
        except protocol.DecodeError as exc:
            return JSONResponse(
                status_code=400, content={"error": str(exc), "offset": exc.offset}
            )
        try:
            result = hub.ingest(env)
        except RejectedMessage as exc:
            return JSONResponse(status_code=422, content={"violations": exc.violations})
        return {"seq": result.seq, "effects": list(result.effects)}

    @app.post("/api/v1/missions", status_code=201)
    async def post_mission(request: Request):
        try:
            payload = await request.json()
        except Exception:
            return JSONResponse(status_code=400, content={"error": "body must be JSON"})
        if not isinstance(payload, dict):
            return JSONResponse(status_code=422, content={"error": "body must be a JSON object"})
        corners_raw = payload.get("corners", [])
        if not isinstance(corners_raw, list) or len(corners_raw) != 4:
            return JSONResponse(
                status_code=422,
                content={"error": f"corners: expected exactly 4, got {len(corners_raw)}"},
            )
        try:
            corners = [
                GeoPoint(c["lat_deg"], c["lon_deg"], c.get("alt_m", 0.0)) for c in corners_raw
            ]
            mission_id = hub.create_mission(
                corners,
                float(payload.get("spacing_m", 0.0)),
                list(payload.get("agent_ids", [])),
                altitude_m=payload.get("altitude_m"),
            )
        except NoIdleAgentsError as exc:
            return JSONResponse(status_code=409, content={"error": str(exc)})
        except (MissionError, KeyError, TypeError, ValueError) as exc:
            return JSONResponse(status_code=422, content={"error": str(exc)})
        return {"mission_id": mission_id}

    @app.get("/api/v1/missions/{mission_id}")
    def get_mission(mission_id: str):
        mission = hub.mission_view(mission_id)
        if mission is None:
            return JSONResponse(status_code=404, content={"error": f"no mission {mission_id}"})
        return mission

    @app.get("/api/v1/agents")
    def get_agents():
        return hub.agents_view()

    @app.get("/api/v1/threats")
    def get_threats():
        return hub.belief_view()

    @app.get("/api/v1/documents/ranked")
    def get_ranked(k: int = Query(default=10, ge=1)):
        return hub.ranked_docs_view(k)

    @app.get("/api/v1/snapshot")
    def get_snapshot():
        return hub.snapshot()

    @app.get("/api/v1/events")
    def get_events(since: int = Query(default=0, ge=0)):
        return {"events": hub.events_since(since)}

    return app
