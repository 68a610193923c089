"""Regenerate the natural-image test fixtures under tests/fixtures/.

The source images ship with scikit-image (public domain / CC0). Each is
center-cropped to a square, box-filtered down to 128x128 and written as
8-bit RGB PNG.
"""
import pathlib

import numpy as np
import skimage.data
import skimage.io
import skimage.transform

NAMES = ["astronaut", "chelsea", "coffee", "rocket", "immunohistochemistry", "camera"]
SIZE = 128


def main():
    out = pathlib.Path(__file__).resolve().parent.parent / "tests" / "fixtures"
    out.mkdir(parents=True, exist_ok=True)
    for name in NAMES:
        img = getattr(skimage.data, name)()
        if img.ndim == 2:
            img = np.stack([img] * 3, axis=-1)
        img = img[..., :3]
        h, w = img.shape[:2]
        side = min(h, w)
        y0, x0 = (h - side) // 2, (w - side) // 2
        crop = img[y0:y0 + side, x0:x0 + side].astype(np.float64) / 255.0
        small = skimage.transform.resize(crop, (SIZE, SIZE), order=1, anti_aliasing=True)
        skimage.io.imsave(out / f"{name}.png", np.round(small * 255).astype(np.uint8), check_contrast=False)


if __name__ == "__main__":
    main()
