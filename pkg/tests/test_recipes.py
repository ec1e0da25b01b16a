"""Recipe matching and session navigation.

match_recipe is checked against a brute-force scorer over the whole
library; navigation against a fold with explicit bounds clamping.
"""

import json
from pathlib import Path

import numpy as np
import pytest

from spice.dial import StepNavEvent
from spice.recipes import (
    DisplayModel,
    Recipe,
    RecipeStep,
    apply_nav,
    display_payload,
    load_recipe_library,
    match_recipe,
    new_session,
    score_recipe,
    session_snapshot,
)
from spice.scene import default_workspace

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture(scope="module")
def library():
    return load_recipe_library(FIXTURES / "recipes.json")


def nav(direction, t=0.0):
    return StepNavEvent(direction=direction, timestamp=t, source="spice://rbi/1")


# ---------------------------------------------------------------------------
# Library fixture
# ---------------------------------------------------------------------------


def test_guacamole_fixture_shape(library):
    guac = next(r for r in library if r.id == "guacamole")
    assert guac.title == "Guacamole"
    assert set(guac.ingredients) == {"tomato", "avocado", "lemon", "onion"}
    assert len(guac.steps) == 5
    assert all(s.summary for s in guac.steps)


def test_recipe_requires_steps():
    with pytest.raises(ValueError):
        Recipe(id="x", title="X", ingredients=("a",), steps=())


# ---------------------------------------------------------------------------
# Matching
# ---------------------------------------------------------------------------


def brute_force_best(detected, library):
    """Independent scorer: full scan, explicit tie-break ordering."""
    detected = set(detected)
    scored = []
    for r in library:
        wanted = set(r.ingredients)
        covered = len(wanted & detected)
        score = covered / len(wanted)
        extras = len(detected - wanted)
        scored.append((-score, extras, r.id, score))
    scored.sort()
    top = scored[0]
    return None if top[3] < 0.5 else (top[2], top[3])


def test_four_ingredients_match_guacamole_fully(library):
    best = match_recipe({"tomato", "avocado", "lemon", "onion"}, library)
    assert best is not None
    assert best.recipe_id == "guacamole"
    assert best.score == 1.0
    assert best.covered == 4 and best.missing == 0 and best.extra == ()


def test_empty_detection_matches_nothing(library):
    assert match_recipe(set(), library) is None


def test_three_of_four_ingredients_still_match(library):
    best = match_recipe({"tomato", "avocado", "lemon"}, library)
    assert best is not None
    assert best.recipe_id == "guacamole"
    assert best.score == 0.75


def test_covered_plus_missing_equals_ingredient_count(library):
    rng = np.random.default_rng(19)
    pool = ["tomato", "avocado", "lemon", "onion", "lime", "coriander", "salt", "egg"]
    for _ in range(200):
        detected = {pool[i] for i in rng.choice(len(pool), size=rng.integers(0, 6), replace=False)}
        for recipe in library:
            s = score_recipe(detected, recipe)
            assert s.covered + s.missing == len(recipe.ingredients)
            assert 0.0 <= s.score <= 1.0


def test_match_agrees_with_brute_force_on_random_sets(library):
    rng = np.random.default_rng(21)
    pool = ["tomato", "avocado", "lemon", "onion", "lime", "coriander", "salt", "egg", "rice"]
    for _ in range(500):
        k = int(rng.integers(0, 7))
        detected = {pool[i] for i in rng.choice(len(pool), size=k, replace=False)}
        got = match_recipe(detected, library)
        want = brute_force_best(detected, library)
        if want is None:
            assert got is None
        else:
            assert got is not None
            assert (got.recipe_id, got.score) == want


def test_tie_broken_by_fewer_extras():
    a = Recipe("aa", "A", ("x", "y"), (RecipeStep("s", ""),))
    b = Recipe("bb", "B", ("x", "z"), (RecipeStep("s", ""),))
    # {x, y} covers A fully (no extras) and B half (extra y)
    best = match_recipe({"x", "y"}, [b, a])
    assert best.recipe_id == "aa"


def test_exact_tie_broken_lexicographically():
    a = Recipe("aa", "A", ("x",), (RecipeStep("s", ""),))
    b = Recipe("bb", "B", ("x",), (RecipeStep("s", ""),))
    best = match_recipe({"x"}, [b, a])
    assert best.recipe_id == "aa"


def test_empty_library_matches_nothing():
    assert match_recipe({"tomato"}, []) is None


# ---------------------------------------------------------------------------
# Session navigation
# ---------------------------------------------------------------------------


def test_prev_at_first_step_saturates(library):
    guac = library[0]
    s = new_session(guac, ("tomato",), 0.0)
    s = apply_nav(s, guac, nav("prev", 1.0))
    assert s.current_step == 0


def test_next_at_last_step_saturates(library):
    guac = next(r for r in library if r.id == "guacamole")
    s = new_session(guac, (), 0.0)
    for i in range(10):
        s = apply_nav(s, guac, nav("next", float(i)))
    assert s.current_step == len(guac.steps) - 1


def test_event_fold_example(library):
    guac = next(r for r in library if r.id == "guacamole")
    s = new_session(guac, (), 0.0)
    for i, d in enumerate(["next", "next", "prev", "next"]):
        s = apply_nav(s, guac, nav(d, float(i)))
    assert s.current_step == 2


def test_step_always_in_bounds_under_fuzzed_streams(library):
    guac = next(r for r in library if r.id == "guacamole")
    rng = np.random.default_rng(23)
    for _ in range(100):
        s = new_session(guac, (), 0.0)
        expected = 0
        for i in range(100):
            d = "next" if rng.random() < 0.5 else "prev"
            s = apply_nav(s, guac, nav(d, float(i)))
            expected = min(max(expected + (1 if d == "next" else -1), 0), 4)
            assert 0 <= s.current_step < len(guac.steps)
        assert s.current_step == expected


def test_log_accumulates_in_order(library):
    guac = library[0]
    s = new_session(guac, (), 0.0)
    s = apply_nav(s, guac, nav("next", 1.0))
    s = apply_nav(s, guac, nav("prev", 2.0))
    kinds = [k for _, k in s.log]
    assert kinds == ["session:start", "nav:next", "nav:prev"]
    times = [t for t, _ in s.log]
    assert times == sorted(times)


# ---------------------------------------------------------------------------
# Display snapshot
# ---------------------------------------------------------------------------


def test_snapshot_layout(library):
    guac = next(r for r in library if r.id == "guacamole")
    ws = default_workspace()
    s = new_session(guac, ("tomato", "avocado", "lemon", "onion"), 0.0)
    s = apply_nav(s, guac, nav("next", 1.0))
    s = apply_nav(s, guac, nav("next", 2.0))
    model = session_snapshot(s, library, ws)
    assert [label for label, _ in model.boxes] == ["tomato", "avocado", "lemon", "onion"]
    assert [slot for _, slot in model.boxes] == [0, 1, 2, 3]
    assert len(model.bubbles) == 5
    highlighted = [idx for _, idx, on in model.bubbles if on]
    assert highlighted == [2]
    assert model.detail == guac.steps[2].detail
    assert len(model.dial_zone_px) == 4


def test_snapshot_is_deterministic(library):
    guac = library[0]
    ws = default_workspace()
    s = new_session(guac, ("tomato",), 0.0)
    a = json.dumps(display_payload(session_snapshot(s, library, ws)), sort_keys=True)
    b = json.dumps(display_payload(session_snapshot(s, library, ws)), sort_keys=True)
    assert a == b


def test_snapshot_marks_exactly_one_bubble_at_every_step(library):
    guac = next(r for r in library if r.id == "guacamole")
    ws = default_workspace()
    s = new_session(guac, (), 0.0)
    for i in range(6):
        model = session_snapshot(s, library, ws)
        assert sum(1 for _, _, on in model.bubbles if on) == 1
        s = apply_nav(s, guac, nav("next", float(i)))
