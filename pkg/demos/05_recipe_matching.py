"""From a tabletop photo to a projected recipe display.

Runs the mock vision adapter on a scripted frame, matches the detected
ingredients against the library, and folds navigation into the session.
"""

from pathlib import Path

from spice.detection import MockVisionAdapter, detect_ingredients
from spice.dial import StepNavEvent
from spice.recipes import (
    apply_nav,
    display_payload,
    load_recipe_library,
    match_recipe,
    new_session,
    session_snapshot,
)
from spice.scene import load_workspace

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def main():
    library = load_recipe_library(FIXTURES / "recipes.json")
    workspace = load_workspace(FIXTURES / "workspace.json")
    adapter = MockVisionAdapter.from_file(FIXTURES / "vlm_script.json")

    result = detect_ingredients(None, adapter, image_ref="table.ppm")
    labels = [label for label, _ in result.labels]
    print(f"adapter saw: {result.raw_response!r}")
    print(f"normalized: {labels}")

    match = match_recipe(result.label_set(), library)
    print(f"matched: {match.recipe_id} (coverage {match.score:.2f}, "
          f"{match.covered} covered, {match.missing} missing)")

    recipe = next(r for r in library if r.id == match.recipe_id)
    session = new_session(recipe, labels, timestamp=0.0)
    for i, direction in enumerate(["next", "next", "prev", "next"]):
        event = StepNavEvent(direction=direction, timestamp=1.0 + i, source="spice://rbi/1")
        session = apply_nav(session, recipe, event)
        step = recipe.steps[session.current_step]
        print(f"{direction:>4} -> step {session.current_step}: {step.summary}")

    model = session_snapshot(session, library, workspace)
    payload = display_payload(model)
    print(f"display: {len(payload['boxes'])} ingredient boxes, "
          f"{len(payload['bubbles'])} step bubbles, "
          f"highlighted {[b[1] for b in payload['bubbles'] if b[2]]}")
    assert session.current_step == 2


if __name__ == "__main__":
    main()
