"""Writes synthetic_regions.geojson: three adjacent, irregular regions of
roughly 960 square miles each, laid out west to east near 95.4W 29.8N.
These are not real hydrologic boundaries."""
import json
import math

R = 3958.8
LON0, LAT0 = -95.4, 29.8

# Shared west-east boundaries (south to north), in miles.
b12 = [(-15, -16), (-12, -6), (-17, 3), (-14, 16)]
b23 = [(15, -16), (18, -4), (13, 7), (16, 16)]
west = [(-45, 16), (-48, 4), (-43, -7), (-45, -16)]
east = [(45, -16), (47, -3), (43, 9), (45, 16)]

regions = {
    "1": west + b12,
    "2": b12 + list(reversed(b23)),
    "3": list(reversed(b23)) + east,
}


def to_lonlat(p):
    x, y = p
    lat = LAT0 + math.degrees(y / R)
    lon = LON0 + math.degrees(x / (R * math.cos(math.radians(LAT0))))
    return [round(lon, 7), round(lat, 7)]


features = []
for rid, ring in regions.items():
    coords = [to_lonlat(p) for p in ring]
    coords.append(coords[0])
    features.append({
        "type": "Feature",
        "properties": {"region_id": rid, "name": f"Synthetic region {rid}"},
        "geometry": {"type": "Polygon", "coordinates": [coords]},
    })

with open("synthetic_regions.geojson", "w") as f:
    json.dump({"type": "FeatureCollection", "features": features}, f, indent=1)
    f.write("\n")
