"""Recipe library, ingredient matching, and the cooking-session state machine.

A session is an immutable value; navigation returns a new session with the
event appended to its log. Snapshots project the session into the display
model the projector surface renders.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

from spice.dial import StepNavEvent
from spice.scene import Workspace, table_to_projector

MATCH_THRESHOLD = 0.5


@dataclass(frozen=True)
class RecipeStep:
    summary: str
    detail: str


@dataclass(frozen=True)
class Recipe:
    id: str
    title: str
    ingredients: tuple[str, ...]
    steps: tuple[RecipeStep, ...]

    def __post_init__(self):
        object.__setattr__(self, "ingredients", tuple(self.ingredients))
        object.__setattr__(self, "steps", tuple(self.steps))
        if not self.steps:
            raise ValueError("recipe needs at least one step")
        if any(not s.summary for s in self.steps):
            raise ValueError("step summaries must be non-empty")


@dataclass(frozen=True)
class MatchScore:
    recipe_id: str
    covered: int
    missing: int
    extra: tuple[str, ...]
    score: float


@dataclass(frozen=True)
class RecipeSession:
    recipe_id: str
    current_step: int
    detected: tuple[str, ...]
    log: tuple[tuple[float, str], ...] = ()


@dataclass(frozen=True)
class DisplayModel:
    """Everything the projected surface needs to draw one frame."""

    recipe_id: str
    title: str
    boxes: tuple[tuple[str, int], ...]  # (ingredient label, slot index)
    bubbles: tuple[tuple[str, int, bool], ...]  # (summary, index, highlighted)
    detail: str
    current_step: int
    step_count: int
    dial_zone_px: tuple[tuple[float, float], ...]


def load_recipe_library(path) -> list[Recipe]:
    """Read the recipe library JSON (array of id/title/ingredients/steps)."""
    with open(path, encoding="utf-8") as f:
        data = json.load(f)
    recipes = []
    for entry in data:
        steps = tuple(RecipeStep(summary=s["summary"], detail=s.get("detail", "")) for s in entry["steps"])
        recipes.append(
            Recipe(
                id=str(entry["id"]),
                title=str(entry["title"]),
                ingredients=tuple(str(i) for i in entry["ingredients"]),
                steps=steps,
            )
        )
    ids = [r.id for r in recipes]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate recipe ids in library")
    return recipes


def score_recipe(detected: set[str], recipe: Recipe) -> MatchScore:
    wanted = set(recipe.ingredients)
    covered = len(wanted & detected)
    return MatchScore(
        recipe_id=recipe.id,
        covered=covered,
        missing=len(wanted) - covered,
        extra=tuple(sorted(detected - wanted)),
        score=covered / len(wanted) if wanted else 0.0,
    )


def match_recipe(detected, library) -> MatchScore | None:
    """Best-covered recipe, or None when nothing reaches the threshold.

    Ties break toward fewer extraneous detections, then lexicographic id.
    """
    detected = set(detected)
    best: MatchScore | None = None
    for recipe in library:
        score = score_recipe(detected, recipe)
        if best is None:
            best = score
            continue
        key = (-score.score, len(score.extra), score.recipe_id)
        best_key = (-best.score, len(best.extra), best.recipe_id)
        if key < best_key:
            best = score
    if best is None or best.score < MATCH_THRESHOLD:
        return None
    return best


def new_session(recipe: Recipe, detected, timestamp: float) -> RecipeSession:
    return RecipeSession(
        recipe_id=recipe.id,
        current_step=0,
        detected=tuple(detected),
        log=((timestamp, "session:start"),),
    )


def apply_nav(session: RecipeSession, recipe: Recipe, event: StepNavEvent) -> RecipeSession:
    """Fold one navigation event into the session; saturates at both ends."""
    if recipe.id != session.recipe_id:
        raise ValueError("event applied against the wrong recipe")
    step = session.current_step + (1 if event.direction == "next" else -1)
    step = min(max(step, 0), len(recipe.steps) - 1)
    return replace(
        session,
        current_step=step,
        log=session.log + ((event.timestamp, f"nav:{event.direction}"),),
    )


def annotate(session: RecipeSession, timestamp: float, kind: str) -> RecipeSession:
    return replace(session, log=session.log + ((timestamp, kind),))


def session_snapshot(session: RecipeSession, library, workspace: Workspace) -> DisplayModel:
    """Pure projection of session state into the display model."""
    recipe = next(r for r in library if r.id == session.recipe_id)
    dial_poly = workspace.zones.get("dial")
    outline = ()
    if dial_poly is not None:
        outline = tuple(table_to_projector(workspace, (float(x), float(y))) for x, y in dial_poly)
    step = session.current_step
    return DisplayModel(
        recipe_id=recipe.id,
        title=recipe.title,
        boxes=tuple((label, i) for i, label in enumerate(session.detected)),
        bubbles=tuple((s.summary, i, i == step) for i, s in enumerate(recipe.steps)),
        detail=recipe.steps[step].detail,
        current_step=step,
        step_count=len(recipe.steps),
        dial_zone_px=outline,
    )


def display_payload(model: DisplayModel) -> dict:
    """JSON-able dict form of a display model (stable field order by key)."""
    return {
        "recipe_id": model.recipe_id,
        "title": model.title,
        "boxes": [[label, slot] for label, slot in model.boxes],
        "bubbles": [[text, idx, bool(flag)] for text, idx, flag in model.bubbles],
        "detail": model.detail,
        "current_step": model.current_step,
        "step_count": model.step_count,
        "dial_zone_px": [[float(x), float(y)] for x, y in model.dial_zone_px],
    }
