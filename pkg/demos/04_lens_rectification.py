"""Undo barrel distortion on a synthetic camera frame.

Simulates a lens that displaces a straight row of dots outward, rectifies
the frame, and shows the dots landing back on a straight line.
"""

import numpy as np

from spice.detection import CameraImage, DistortionModel, rectify_image


def render_dots(width, height, centers, radius=3.0) -> CameraImage:
    yy, xx = np.mgrid[0:height, 0:width]
    canvas = np.zeros((height, width), dtype=float)
    for cx, cy in centers:
        canvas += 255.0 * np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / (2 * radius**2))
    pixels = np.repeat(np.clip(canvas, 0, 255)[..., None], 3, axis=2).astype(np.uint8)
    return CameraImage(width, height, pixels.tobytes())


def centroid_v(img: CameraImage, u_lo: int, u_hi: int) -> float:
    gray = img.as_array()[:, u_lo:u_hi, 0].astype(float)
    vv = np.arange(img.height)[:, None]
    return float((gray * vv).sum() / gray.sum())


def main():
    width, height = 320, 240
    model = DistortionModel(fx=260.0, fy=260.0, cx=160.0, cy=120.0,
                            k1=0.15, k2=-0.02, p1=0.0, p2=0.0)

    # A straight row near the top; the lens pushes each dot off the line.
    row_v = 40.0
    ideal_u = np.array([60.0, 110.0, 160.0, 210.0, 260.0])
    seen_u, seen_v = model.distort(ideal_u, np.full_like(ideal_u, row_v))
    frame = render_dots(width, height, list(zip(seen_u, seen_v)))
    fixed = rectify_image(frame, model)

    print("dot row at v=40 px:")
    for u, sv in zip(ideal_u, seen_v):
        print(f"  u={u:5.0f}  lens shifts v to {sv:6.2f} px ({sv - row_v:+5.2f})")

    spans = [(int(u) - 20, int(u) + 20) for u in ideal_u]
    bent_vs = np.array([centroid_v(frame, lo, hi) for lo, hi in spans])
    flat_vs = np.array([centroid_v(fixed, lo, hi) for lo, hi in spans])
    print(f"row straightness (max - min of dot centroids):")
    print(f"  distorted: {bent_vs.max() - bent_vs.min():5.2f} px")
    print(f"  rectified: {flat_vs.max() - flat_vs.min():5.2f} px")
    assert flat_vs.max() - flat_vs.min() < 1.0

    # The zero model is a guaranteed byte-identical copy.
    identity = DistortionModel(260.0, 260.0, 160.0, 120.0, 0, 0, 0, 0)
    assert rectify_image(frame, identity).pixels == frame.pixels
    print("zero-coefficient model copies the frame byte for byte")


if __name__ == "__main__":
    main()
