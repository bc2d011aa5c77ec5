"""Draws the five tiny synthetic scenes under data/mini/images."""
import pathlib

from PIL import Image, ImageDraw

OUT = pathlib.Path(__file__).resolve().parent.parent / "data" / "mini" / "images"


def kitchen(d):
    d.rectangle([0, 40, 63, 63], fill=(150, 110, 70))
    d.rectangle([8, 12, 26, 40], fill=(230, 230, 235))
    d.ellipse([36, 30, 50, 38], fill=(240, 240, 240))
    d.rectangle([40, 20, 44, 30], fill=(200, 40, 40))


def street(d):
    d.rectangle([0, 0, 63, 30], fill=(140, 180, 230))
    d.rectangle([0, 44, 63, 63], fill=(70, 70, 70))
    d.rectangle([10, 36, 34, 48], fill=(220, 30, 30))
    d.rectangle([48, 10, 52, 44], fill=(60, 60, 60))


def beach(d):
    d.rectangle([0, 0, 63, 24], fill=(120, 190, 240))
    d.rectangle([0, 24, 63, 40], fill=(30, 110, 190))
    d.rectangle([0, 40, 63, 63], fill=(235, 215, 160))
    d.ellipse([44, 4, 56, 16], fill=(255, 220, 60))


def desk(d):
    d.rectangle([0, 0, 63, 63], fill=(225, 220, 210))
    d.rectangle([0, 38, 63, 46], fill=(120, 80, 50))
    d.rectangle([14, 14, 40, 34], fill=(30, 30, 30))
    d.rectangle([46, 28, 52, 38], fill=(250, 250, 250))


def park(d):
    d.rectangle([0, 0, 63, 36], fill=(160, 210, 240))
    d.rectangle([0, 36, 63, 63], fill=(80, 160, 70))
    d.rectangle([14, 22, 18, 40], fill=(100, 70, 40))
    d.ellipse([6, 8, 26, 26], fill=(40, 120, 40))
    d.rectangle([36, 42, 56, 46], fill=(130, 90, 60))


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for name, draw in [("kitchen", kitchen), ("street", street), ("beach", beach),
                       ("desk", desk), ("park", park)]:
        img = Image.new("RGB", (64, 64), (255, 255, 255))
        draw(ImageDraw.Draw(img))
        img.save(OUT / f"{name}.png", optimize=True)


if __name__ == "__main__":
    main()
