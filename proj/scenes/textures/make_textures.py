"""Regenerates the albedo textures used by the bundled scenes."""
from PIL import Image, ImageDraw

N = 128


def checker(path, a, b, cells=8):
    img = Image.new("RGB", (N, N))
    d = ImageDraw.Draw(img)
    s = N // cells
    for i in range(cells):
        for j in range(cells):
            d.rectangle([i * s, j * s, i * s + s - 1, j * s + s - 1], fill=a if (i + j) % 2 == 0 else b)
    img.save(path)


def stripes(path, colors, width=16):
    img = Image.new("RGB", (N, N))
    d = ImageDraw.Draw(img)
    for k, x in enumerate(range(0, N, width)):
        d.rectangle([x, 0, x + width - 1, N - 1], fill=colors[k % len(colors)])
    img.save(path)


def dots(path, bg, fg, step=32, r=10):
    img = Image.new("RGB", (N, N), bg)
    d = ImageDraw.Draw(img)
    for cx in range(step // 2, N, step):
        for cy in range(step // 2, N, step):
            d.ellipse([cx - r, cy - r, cx + r, cy + r], fill=fg)
    img.save(path)


if __name__ == "__main__":
    checker("checker_warm.png", (230, 200, 60), (150, 40, 30))
    stripes("stripes_cool.png", [(40, 90, 200), (220, 220, 220), (30, 160, 120)])
    dots("dots.png", (200, 200, 190), (60, 40, 140))
    checker("floor.png", (190, 190, 190), (120, 120, 120), cells=4)
