"""Ingredient detection: image rectification and vision-model adapters.

The vision model is a pluggable adapter with one job: image in, free-text
ingredient list out. Tests and replay use a deterministic scripted mock;
the live adapter posts to an HTTP endpoint configured by environment
variables. Raw model text is normalized into canonical ingredient labels.
"""

from __future__ import annotations

import json
import math
import os
import re
import urllib.error
import urllib.request
from dataclasses import dataclass

import numpy as np

DEFAULT_DEADLINE_S = 20.0
DETECTION_PROMPT = "List the food ingredients visible on the table, comma separated."


class InvalidModel(ValueError):
    """Distortion model contains non-finite or nonsensical parameters."""


class AdapterTimeout(RuntimeError):
    """The vision adapter did not answer within its deadline."""


class AdapterRefusal(RuntimeError):
    """The vision adapter answered with something unusable."""


@dataclass(frozen=True)
class CameraImage:
    """8-bit RGB frame; ``pixels`` is a flat bytes buffer, row-major."""

    width: int
    height: int
    pixels: bytes
    timestamp: float = 0.0

    def __post_init__(self):
        if len(self.pixels) != self.width * self.height * 3:
            raise ValueError("pixel buffer length must be width*height*3")

    def as_array(self) -> np.ndarray:
        return np.frombuffer(self.pixels, dtype=np.uint8).reshape(self.height, self.width, 3)


@dataclass(frozen=True)
class DistortionModel:
    """Radial-tangential lens model (two radial, two tangential terms)."""

    fx: float
    fy: float
    cx: float
    cy: float
    k1: float = 0.0
    k2: float = 0.0
    p1: float = 0.0
    p2: float = 0.0

    def __post_init__(self):
        values = (self.fx, self.fy, self.cx, self.cy, self.k1, self.k2, self.p1, self.p2)
        if not all(math.isfinite(v) for v in values):
            raise InvalidModel("distortion parameters must be finite")
        if self.fx <= 0 or self.fy <= 0:
            raise InvalidModel("focal lengths must be positive")

    def is_zero(self) -> bool:
        return self.k1 == 0.0 and self.k2 == 0.0 and self.p1 == 0.0 and self.p2 == 0.0

    def distort(self, u, v):
        """Forward-distort ideal pixel coordinates (vectorized)."""
        x = (np.asarray(u, dtype=float) - self.cx) / self.fx
        y = (np.asarray(v, dtype=float) - self.cy) / self.fy
        r2 = x * x + y * y
        radial = 1.0 + self.k1 * r2 + self.k2 * r2 * r2
        xd = x * radial + 2.0 * self.p1 * x * y + self.p2 * (r2 + 2.0 * x * x)
        yd = y * radial + self.p1 * (r2 + 2.0 * y * y) + 2.0 * self.p2 * x * y
        return self.fx * xd + self.cx, self.fy * yd + self.cy


@dataclass(frozen=True)
class DetectionResult:
    """Normalized ingredient labels plus the raw adapter response."""

    labels: tuple[tuple[str, float], ...]
    raw_response: str
    model_id: str

    def label_set(self) -> set[str]:
        return {label for label, _ in self.labels}


# ---------------------------------------------------------------------------
# Rectification
# ---------------------------------------------------------------------------


def rectify_image(img: CameraImage, model: DistortionModel) -> CameraImage:
    """Undistort by inverse mapping with bilinear sampling.

    Each output pixel holds ideal (straight-line) coordinates; its value is
    sampled from where the lens bent that ray to, clamped to the source
    bounds, so no sample ever reads outside the buffer.
    """
    if model.is_zero():
        return CameraImage(img.width, img.height, img.pixels, img.timestamp)

    src = img.as_array().astype(np.float64)
    u, v = np.meshgrid(np.arange(img.width, dtype=float), np.arange(img.height, dtype=float))
    su, sv = model.distort(u, v)
    su = np.clip(su, 0.0, img.width - 1.0)
    sv = np.clip(sv, 0.0, img.height - 1.0)

    u0 = np.floor(su).astype(int)
    v0 = np.floor(sv).astype(int)
    u1 = np.minimum(u0 + 1, img.width - 1)
    v1 = np.minimum(v0 + 1, img.height - 1)
    fu = (su - u0)[..., None]
    fv = (sv - v0)[..., None]

    out = (
        src[v0, u0] * (1 - fu) * (1 - fv)
        + src[v0, u1] * fu * (1 - fv)
        + src[v1, u0] * (1 - fu) * fv
        + src[v1, u1] * fu * fv
    )
    buf = np.clip(np.rint(out), 0, 255).astype(np.uint8).tobytes()
    return CameraImage(img.width, img.height, buf, img.timestamp)


# ---------------------------------------------------------------------------
# PPM fixtures
# ---------------------------------------------------------------------------


def read_ppm(path) -> CameraImage:
    """Read a binary (P6) PPM with maxval 255."""
    with open(path, "rb") as f:
        data = f.read()
    if not data.startswith(b"P6"):
        raise ValueError("not a P6 PPM file")
    # header tokens may be separated by arbitrary whitespace and comments
    tokens = []
    pos = 2
    while len(tokens) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        tokens.append(int(data[start:pos]))
    pos += 1  # single whitespace after maxval
    width, height, maxval = tokens
    if maxval != 255:
        raise ValueError("only maxval 255 supported")
    pixels = data[pos : pos + width * height * 3]
    return CameraImage(width=width, height=height, pixels=pixels)


def write_ppm(path, img: CameraImage):
    with open(path, "wb") as f:
        f.write(b"P6\n%d %d\n255\n" % (img.width, img.height))
        f.write(img.pixels)


# ---------------------------------------------------------------------------
# Label normalization
# ---------------------------------------------------------------------------

_ARTICLES = ("a ", "an ", "the ", "some ", "fresh ")
_PLURAL_EXCEPTIONS = ("ss", "us", "is")
SYNONYMS = {
    "scallion": "green onion",
    "spring onion": "green onion",
    "aubergine": "eggplant",
    "courgette": "zucchini",
    "cilantro": "coriander",
    "garbanzo bean": "chickpea",
}


def _singularize(word: str) -> str:
    if word.endswith("ies") and len(word) > 3:
        return word[:-3] + "y"
    if word.endswith("oes") and len(word) > 3:
        return word[:-2]
    if word.endswith("es") and word[:-2].endswith(("sh", "ch", "x", "z")):
        return word[:-2]
    if word.endswith("s") and not word.endswith(_PLURAL_EXCEPTIONS):
        return word[:-1]
    return word


def normalize_label(raw: str) -> str | None:
    """Canonical ingredient identifier for a free-text label, or None.

    Lowercase, trimmed, articles stripped, last word singularized, then
    mapped through the synonym table. Idempotent by construction.
    """
    s = raw.strip().lower()
    s = re.sub(r"[^\w\s\-]", "", s)
    s = re.sub(r"\s+", " ", s).strip()
    for article in _ARTICLES:
        if s.startswith(article):
            s = s[len(article) :]
    if not s:
        return None
    words = s.split(" ")
    words[-1] = _singularize(words[-1])
    s = " ".join(words)
    return SYNONYMS.get(s, s)


def parse_label_text(text: str) -> list[str]:
    """Split adapter free text into raw label candidates.

    Accepts a JSON array, bulleted lines, or comma/semicolon separation.
    """
    stripped = text.strip()
    if not stripped:
        return []
    try:
        parsed = json.loads(stripped)
        if isinstance(parsed, list):
            return [str(item) for item in parsed]
    except json.JSONDecodeError:
        pass
    lines = [ln.strip() for ln in stripped.splitlines() if ln.strip()]
    items: list[str] = []
    for line in lines:
        line = re.sub(r"^[-*•]\s*|^\d+[.)]\s*", "", line)
        items.extend(part for part in re.split(r"[,;]", line) if part.strip())
    return [item.strip() for item in items]


MAX_LABEL_WORDS = 4


def detect_ingredients(img: CameraImage | None, client, image_ref: str | None = None) -> DetectionResult:
    """Ask the vision adapter about an image and normalize its answer.

    An empty answer is a valid "nothing recognized". An answer in which no
    candidate survives normalization (for example a refusal sentence) raises
    AdapterRefusal; callers translate that into a degraded-mode event.
    """
    text = client.describe(img, image_ref=image_ref)
    if text is None:
        raise AdapterRefusal("adapter returned no text")
    candidates = parse_label_text(text)
    labels: list[tuple[str, float]] = []
    seen = set()
    usable = 0
    for raw in candidates:
        if len(raw.split()) > MAX_LABEL_WORDS:
            continue
        label = normalize_label(raw)
        if label is None:
            continue
        usable += 1
        if label not in seen:
            seen.add(label)
            labels.append((label, 1.0))
    if candidates and usable == 0:
        raise AdapterRefusal("no candidate label survived normalization")
    return DetectionResult(labels=tuple(labels), raw_response=text, model_id=client.model_id)


class MockVisionAdapter:
    """Deterministic adapter: scripted responses keyed by image reference."""

    model_id = "mock"

    def __init__(self, script: dict[str, str]):
        self.script = dict(script)

    @classmethod
    def from_file(cls, path) -> "MockVisionAdapter":
        with open(path, encoding="utf-8") as f:
            return cls(json.load(f))

    def describe(self, img: CameraImage | None, image_ref: str | None = None) -> str:
        if image_ref not in self.script:
            raise AdapterRefusal(f"no scripted response for {image_ref!r}")
        return self.script[image_ref]


class LiveVisionAdapter:
    """HTTP adapter posting a PPM-encoded frame and a fixed prompt.

    Endpoint and key come from SPICE_VLM_URL / SPICE_VLM_KEY. Exists for
    live deployments; every test path uses the mock.
    """

    model_id = "live"

    def __init__(self, url: str | None = None, key: str | None = None, deadline_s: float = DEFAULT_DEADLINE_S):
        self.url = url or os.environ.get("SPICE_VLM_URL", "")
        self.key = key or os.environ.get("SPICE_VLM_KEY", "")
        self.deadline_s = deadline_s
        if not self.url:
            raise ValueError("no vision endpoint configured (SPICE_VLM_URL)")

    def describe(self, img: CameraImage | None, image_ref: str | None = None) -> str:
        if img is None:
            raise AdapterRefusal("live adapter needs an image")
        body = json.dumps(
            {
                "prompt": DETECTION_PROMPT,
                "width": img.width,
                "height": img.height,
                "pixels_hex": img.pixels.hex(),
            }
        ).encode("utf-8")
        req = urllib.request.Request(
            self.url,
            data=body,
            headers={"Content-Type": "application/json", "Authorization": f"Bearer {self.key}"},
        )
        try:
            with urllib.request.urlopen(req, timeout=self.deadline_s) as resp:
                return resp.read().decode("utf-8")
        except TimeoutError as exc:
            raise AdapterTimeout(str(exc)) from exc
        except urllib.error.URLError as exc:
            if isinstance(exc.reason, TimeoutError):
                raise AdapterTimeout(str(exc)) from exc
            raise AdapterRefusal(str(exc)) from exc
