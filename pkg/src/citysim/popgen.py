"""Deterministic synthetic population: homes, workplaces, wages and daily
trip schedules, all driven by one seed."""

from __future__ import annotations

import random
from dataclasses import dataclass

from .errors import NO_RESIDENTIAL, SimError
from .model import MapBundle, Person, Trip

AGE_GROUPS = ("18-25", "26-40", "41-60", "60+")
OCCUPATIONS = ("service", "manufacturing", "office", "education", "retail")


@dataclass
class PopGenConfig:
    n_persons: int = 100
    seed: int = 0
    depart_home_mean: int = 8 * 3600
    depart_home_std: int = 30 * 60
    depart_earliest: int = 5 * 3600
    depart_latest: int = 11 * 3600
    leisure_prob: float = 0.3
    walk_below_m: float = 1000.0  # walk under this straight-line distance
    bike_below_m: float = 3000.0  # bike under this, drive at or above
    work_duration: int = 9 * 3600
    leisure_duration: int = 3600
    wage_jitter: float = 0.2
    initial_balance: int = 500_000
    days: int = 1  # replicate the daily pattern over this many days

    def __post_init__(self):
        if not 0.0 <= self.leisure_prob <= 1.0:
            raise ValueError("leisure_prob must lie in [0, 1]")
        if self.n_persons < 0:
            raise ValueError("n_persons must be non-negative")


def _mode_for(distance: float, cfg: PopGenConfig) -> str:
    if distance < cfg.walk_below_m:
        return "walk"
    if distance < cfg.bike_below_m:
        return "bike"
    return "drive"


def generate_population(bundle: MapBundle, cfg: PopGenConfig) -> dict[int, Person]:
    """Sample persons with homes, workplaces, wages and commute schedules.

    Homes follow residential population weights; workplaces follow
    enterprise headcounts; the optional leisure stop picks uniformly among
    POIs whose category is priced in their AOI's consumption table.
    """
    residential = [
        a for a in sorted(bundle.aois) if bundle.aois[a].land_use == "residential"
    ]
    if cfg.n_persons > 0 and not residential:
        raise SimError(NO_RESIDENTIAL, "map has no residential AOI")
    home_weights = [max(bundle.aois[a].population, 1) for a in residential]

    employers = [a for a in sorted(bundle.aois) if bundle.aois[a].enterprises]
    employer_weights = [
        max(sum(e.employee_count for e in bundle.aois[a].enterprises), 1) for a in employers
    ]

    priced_pois = [
        p
        for p in sorted(bundle.pois)
        if bundle.pois[p].aoi_id is not None
        and bundle.aois[bundle.pois[p].aoi_id].consumption.get(bundle.pois[p].cate1, 0) > 0
    ]

    rng = random.Random(cfg.seed)
    base_id = max(bundle.persons) + 1 if bundle.persons else 1
    out: dict[int, Person] = {}
    for i in range(cfg.n_persons):
        pid = base_id + i
        home = rng.choices(residential, weights=home_weights)[0]
        workplace = rng.choices(employers, weights=employer_weights)[0] if employers else None

        wage = 0
        if workplace is not None:
            base_wage = bundle.aois[workplace].enterprises[0].average_wage
            wage = int(base_wage * (1.0 + rng.uniform(-cfg.wage_jitter, cfg.wage_jitter)))

        trips: list[Trip] = []
        home_c = bundle.aois[home].centroid
        for day in range(cfg.days):
            t0 = day * 86400
            depart = int(rng.gauss(cfg.depart_home_mean, cfg.depart_home_std))
            while not cfg.depart_earliest <= depart <= cfg.depart_latest:
                depart = int(rng.gauss(cfg.depart_home_mean, cfg.depart_home_std))
            leisure = rng.random() < cfg.leisure_prob and priced_pois
            if workplace is not None:
                work_c = bundle.aois[workplace].centroid
                trips.append(
                    Trip(("aoi", workplace), t0 + depart, _mode_for(home_c.dist(work_c), cfg))
                )
                back_at = t0 + depart + cfg.work_duration
                if leisure:
                    poi_id = priced_pois[rng.randrange(len(priced_pois))]
                    poi = bundle.pois[poi_id]
                    trips.append(
                        Trip(("poi", poi_id), back_at, _mode_for(work_c.dist(poi.coordinate), cfg))
                    )
                    trips.append(
                        Trip(
                            ("aoi", home),
                            back_at + cfg.leisure_duration,
                            _mode_for(poi.coordinate.dist(home_c), cfg),
                        )
                    )
                else:
                    trips.append(
                        Trip(("aoi", home), back_at, _mode_for(work_c.dist(home_c), cfg))
                    )
            elif leisure:
                poi_id = priced_pois[rng.randrange(len(priced_pois))]
                poi = bundle.pois[poi_id]
                trips.append(
                    Trip(("poi", poi_id), t0 + depart, _mode_for(home_c.dist(poi.coordinate), cfg))
                )
                trips.append(
                    Trip(
                        ("aoi", home),
                        t0 + depart + cfg.leisure_duration,
                        _mode_for(poi.coordinate.dist(home_c), cfg),
                    )
                )

        out[pid] = Person(
            id=pid,
            home=home,
            trips=trips,
            persona={
                "age_group": rng.choice(AGE_GROUPS),
                "occupation": rng.choice(OCCUPATIONS),
            },
            balance=cfg.initial_balance,
            wage=wage,
            workplace=workplace,
        )
    return out
