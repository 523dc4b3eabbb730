# 05_service_walkthrough.py
# Drive the trial-conduct service in process: create a trial, post cohorts,
# ask a what-if question, and show that asking changed nothing.
#
# The same requests work over HTTP against `bblrm serve`; TestClient just
# saves starting a server for a demo.

import json
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from bblrm.service import create_app

data_dir = Path(tempfile.mkdtemp()) / "trials"
client = TestClient(create_app(data_dir))

fast = {"mcmc": {"burn_in": 300, "kept": 800, "thin": 1}}
detail = client.post("/v1/trials", json={"seed": 424242, "config": fast}).json()
trial_id = detail["id"]
rec = detail["initial_recommendation"]
print(f"created trial {trial_id}")
print(f"  start at dose {rec['dose']:g} ({rec['rationale']})")

for outcome in ({"dlt_count": 0, "ndltae_count": 1}, {"dlt_count": 1, "ndltae_count": 2}):
    dose_index = detail["current"]["recommendation"]["dose_index"]
    detail = client.post(
        f"/v1/trials/{trial_id}/cohorts",
        json={"dose_index": dose_index, "n_patients": 3, **outcome},
    ).json()
    rec = detail["current"]["recommendation"]
    print(
        f"  cohort at index {dose_index}: {outcome['dlt_count']}/3 DLTs -> "
        f"next dose {rec['dose']:g} ({rec['rationale']})"
    )

# what would a grim cohort do to the recommendation?
probe = {
    "dose_index": rec["dose_index"],
    "n_patients": 3,
    "dlt_count": 3,
    "ndltae_count": 3,
}
log_before = {p.name: p.read_bytes() for p in data_dir.iterdir()}
wj = client.post(f"/v1/trials/{trial_id}/whatif", json=probe).json()
log_after = {p.name: p.read_bytes() for p in data_dir.iterdir()}

hypothetical = wj["assessment"]["recommendation"]
print(f"\nwhat if the next cohort saw 3/3 DLTs at dose {rec['dose']:g}?")
print(f"  projected recommendation: dose {hypothetical['dose']:g}")
print(f"  event log unchanged: {log_before == log_after}")
print(f"  stored recommendation still: dose {rec['dose']:g}")

print("\nevent log on disk:")
for line in (data_dir / f"{trial_id}.jsonl").read_text().splitlines():
    event = json.loads(line)
    print(f"  {event['type']}")
