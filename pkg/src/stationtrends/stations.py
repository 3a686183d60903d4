"""Station metadata and the corpus manifest file (stations.csv)."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

from .errors import DataError

GROUPS = ("UKH", "UKL", "IH", "IL")


@dataclass(frozen=True)
class StationMeta:
    """Identity and location of one measurement site.

    group is one of UKH/UKL/IH/IL (country and altitude band); region
    further splits the Italian groups (e.g. "Piemonte", "Valle d'Aosta")
    and is empty for UK stations.
    """

    id: str
    name: str
    group: str
    region: str
    latitude: float
    longitude: float
    altitude: float

    def __post_init__(self):
        if not self.id:
            raise DataError("station id must be non-empty")
        if self.group not in GROUPS:
            raise DataError(f"station {self.id}: unknown group {self.group!r}, expected one of {GROUPS}")
        if not -90.0 <= self.latitude <= 90.0:
            raise DataError(f"station {self.id}: latitude {self.latitude} out of range")
        if not -180.0 <= self.longitude <= 180.0:
            raise DataError(f"station {self.id}: longitude {self.longitude} out of range")
        if self.altitude < 0:
            raise DataError(f"station {self.id}: altitude {self.altitude} must be >= 0")


@dataclass(frozen=True)
class Manifest:
    """Parsed stations.csv: station metadata plus declared cadence per station."""

    stations: tuple[StationMeta, ...]
    cadence_min: dict[str, int]

    def __post_init__(self):
        ids = [s.id for s in self.stations]
        if len(set(ids)) != len(ids):
            raise DataError("duplicate station ids in manifest")

    def ids(self) -> list[str]:
        return [s.id for s in self.stations]

    def by_id(self, station_id: str) -> StationMeta:
        for s in self.stations:
            if s.id == station_id:
                return s
        raise KeyError(station_id)


MANIFEST_COLUMNS = ["id", "name", "group", "region", "lat", "lon", "alt_m", "cadence_min"]


def read_manifest(path) -> Manifest:
    """Read a corpus manifest (columns id,name,group,region,lat,lon,alt_m,cadence_min)."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"manifest not found: {path}")
    stations = []
    cadence = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in MANIFEST_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise DataError(f"manifest {path} missing columns: {missing}")
        for row in reader:
            try:
                meta = StationMeta(
                    id=row["id"].strip(),
                    name=row["name"].strip(),
                    group=row["group"].strip(),
                    region=row["region"].strip(),
                    latitude=float(row["lat"]),
                    longitude=float(row["lon"]),
                    altitude=float(row["alt_m"]),
                )
                cadence[meta.id] = int(row["cadence_min"])
            except (ValueError, KeyError) as exc:
                raise DataError(f"manifest {path}: bad row {row!r}: {exc}") from exc
            stations.append(meta)
    if not stations:
        raise DataError(f"manifest {path} lists no stations")
    return Manifest(stations=tuple(stations), cadence_min=cadence)


def write_manifest(path, stations: list[StationMeta], cadence_min: dict[str, int]) -> None:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(MANIFEST_COLUMNS)
        for s in stations:
            writer.writerow([
                s.id, s.name, s.group, s.region,
                f"{s.latitude:.4f}", f"{s.longitude:.4f}", f"{s.altitude:.0f}",
                cadence_min[s.id],
            ])
