"""Synthetic question/KB corpus for desk-scale training and evaluation.

The world is small but deliberately adversarial in the ways that matter:

* multi-token entity aliases, so mention labeling is non-trivial;
* a few template words ("character", "born", "city") that are themselves
  aliases of unrelated entities with facts, so n-gram linking picks up
  noise that mention-focused linking avoids;
* alias collisions (two people sharing a name) whose questions carry a
  profession hint, so the subject model has to use type information.

Everything is generated from a seeded generator; identical seeds produce
byte-identical corpora.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

FIRST_NAMES = [
    "aaron", "bella", "carlos", "diana", "elena", "felix", "grace", "hugo",
    "iris", "jonas", "kara", "liam", "mona", "nadia", "oscar", "paula",
    "quinn", "rosa", "sven", "tina", "ursula", "victor", "wanda", "xavier",
    "yara", "zane",
]
LAST_NAMES = [
    "abbott", "becker", "castillo", "dunn", "ellison", "foster", "grant",
    "hayes", "ibanez", "jansen", "keller", "lopez", "mercer", "norwood",
    "ortega", "price", "quintana", "ramos", "sutton", "torres", "underhill",
    "vance", "whitaker", "yoder", "zimmer",
]

CHARACTERS = ["harry potter", "sherlock stone", "anya moon", "rex thunder",
              "lola vale", "captain ash", "professor night", "mister frost",
              "iron duke", "silent widow"]
BOOKS = ["the silver crown", "the last ember", "a winter tale",
         "the glass garden", "the iron sea", "the clockwork bird",
         "the hollow moon", "the amber road", "the velvet hour",
         "the paper city"]
FILMS = ["night harbor", "the long echo", "paper lanterns",
         "the quiet storm", "border town", "the red canyon",
         "midnight circus", "the salt flats", "winter crossing",
         "the glass bridge"]
ALBUMS = ["northern lights", "echo chamber", "wild rivers", "neon dreams",
          "stone garden", "high tide", "low country", "violet skies",
          "cold engines", "summer static"]
SONGS = ["silver rain", "burning skies", "ocean drive", "electric heart",
         "golden hour", "fading stars", "hollow drums", "glass waves",
         "slow thunder", "paper moon"]
AWARDS = ["golden quill award", "star medal", "crystal globe prize",
          "laurel cup", "amber trophy", "summit prize", "ivory baton",
          "comet ribbon", "granite shield", "meridian honor"]
CITIES = ["new york", "lisbon", "oslo", "prague", "kyoto", "dakar", "lima",
          "havana", "zurich", "melbourne"]
COUNTRIES = ["norway", "japan", "peru", "senegal", "cuba", "australia",
             "portugal", "switzerland", "france", "brazil"]
TEAMS = ["red hawks", "blue otters", "golden bears", "silver foxes",
         "green comets", "black wolves", "crimson gulls", "white herons",
         "copper rams", "night owls"]
INSTRUMENTS = ["guitar", "piano", "violin", "cello", "trumpet", "drums",
               "flute", "harp"]
FIELDS = ["astronomy", "botany", "chemistry", "geology", "linguistics",
          "robotics"]

TEMPLATES = {
    "character_created_by": [
        "who created the character {s}",
        "who is the creator of the character {s}",
        "which author invented {s}",
        "who dreamed up the character {s}",
        "what writer created {s}",
    ],
    "book_written_by": [
        "who wrote the book {s}",
        "who is the author of {s}",
        "which writer wrote {s}",
        "who penned the novel {s}",
        "the book {s} was written by whom",
    ],
    "person_born_in": [
        "where was {s} born",
        "which city was {s} born in",
        "what is the birthplace of {s}",
        "in which city was {s} born",
        "where does {s} come from",
    ],
    "athlete_plays_for": [
        "which team does {s} play for",
        "what team is {s} on",
        "who does {s} play for",
        "which club signed {s}",
        "what squad does {s} belong to",
    ],
    "musician_plays_instrument": [
        "what instrument does {s} play",
        "which instrument is {s} known for",
        "what does {s} perform on",
        "which instrument does {s} master",
        "what is the instrument of {s}",
    ],
    "film_directed_by": [
        "who directed the film {s}",
        "who is the director of {s}",
        "which director made {s}",
        "who filmed {s}",
        "the movie {s} was directed by whom",
    ],
    "city_located_in": [
        "which country is {s} located in",
        "what country is {s} part of",
        "where is the city {s}",
        "in what country is {s}",
        "which nation contains {s}",
    ],
    "album_released_by": [
        "who released the album {s}",
        "which artist put out {s}",
        "whose album is {s}",
        "who recorded the album {s}",
        "which band released {s}",
    ],
    "team_based_in": [
        "which city are the {s} based in",
        "where do the {s} play their home games",
        "what city hosts the {s}",
        "which city is home to the {s}",
        "where are the {s} from",
    ],
    "award_won_by": [
        "who won the {s}",
        "who received the {s}",
        "which person took home the {s}",
        "who was honored with the {s}",
        "who holds the {s}",
    ],
    "scientist_works_in": [
        "what field does {s} work in",
        "which discipline does {s} study",
        "what science does {s} research",
        "which field is {s} an expert in",
        "what area does {s} investigate",
    ],
    "song_performed_by": [
        "who performed the song {s}",
        "who sings {s}",
        "which artist performs {s}",
        "whose song is {s}",
        "who recorded the track {s}",
    ],
}

HINTED_BORN_TEMPLATES = [
    "where was the {hint} {s} born",
    "which city was the {hint} {s} born in",
    "what is the birthplace of the {hint} {s}",
    "in which city was the {hint} {s} born",
    "where does the {hint} {s} come from",
]

# (shared alias, first profession, second profession)
AMBIGUOUS_PAIRS = [
    ("jordan lee", "athlete", "scientist"),
    ("casey morgan", "athlete", "musician"),
    ("taylor reed", "scientist", "musician"),
]

PROFESSION_RELATION = {
    "athlete": "athlete_plays_for",
    "scientist": "scientist_works_in",
    "musician": "musician_plays_instrument",
}


def _canon(alias: str, suffix: str = "") -> str:
    return "".join(w.capitalize() for w in alias.split()) + suffix


@dataclass
class ToyCorpus:
    triples: list[tuple[str, str, str]] = field(default_factory=list)
    aliases: list[tuple[str, str]] = field(default_factory=list)
    types: list[tuple[str, str]] = field(default_factory=list)
    train: list[tuple[str, str, str, str]] = field(default_factory=list)
    test: list[tuple[str, str, str, str]] = field(default_factory=list)


class _World:
    def __init__(self):
        self.corpus = ToyCorpus()
        self._known: set[str] = set()

    def entity(self, alias: str, types, suffix: str = "",
               canonical: str | None = None) -> str:
        name = canonical if canonical is not None else _canon(alias, suffix)
        if name not in self._known:
            self._known.add(name)
            self.corpus.aliases.append((name, name))
            if alias != name:
                self.corpus.aliases.append((name, alias))
            for t in types:
                self.corpus.types.append((name, t))
        return name

    def fact(self, subj: str, rel: str, obj: str) -> None:
        self.corpus.triples.append((subj, rel, obj))


def generate_toy_corpus(seed: int = 0, test_fraction: float = 0.2) -> ToyCorpus:
    rng = np.random.default_rng([seed, 77])
    world = _World()
    corpus = world.corpus

    combo = rng.choice(len(FIRST_NAMES) * len(LAST_NAMES), size=80,
                       replace=False)
    person_names = [
        f"{FIRST_NAMES[i // len(LAST_NAMES)]} {LAST_NAMES[i % len(LAST_NAMES)]}"
        for i in combo.tolist()
    ]

    def take_people(count, types):
        out = []
        for _ in range(count):
            alias = person_names.pop()
            out.append(world.entity(alias, types))
        return out

    authors = take_people(10, ["person", "author"])
    directors = take_people(6, ["person"])
    plain_people = take_people(9, ["person"])
    athletes = take_people(9, ["person", "athlete"])
    musicians = take_people(9, ["person", "musician"])
    scientists = take_people(9, ["person", "scientist"])

    # fixed anchor: the canonical worked example
    rowling = world.entity("jk rowling", ["person", "author"],
                           canonical="JKRowling")
    characters = [world.entity(a, ["character"]) for a in CHARACTERS]
    books = [world.entity(a, ["book"]) for a in BOOKS]
    films = [world.entity(a, ["film"]) for a in FILMS]
    albums = [world.entity(a, ["album"]) for a in ALBUMS]
    songs = [world.entity(a, ["song"]) for a in SONGS]
    awards = [world.entity(a, ["award"]) for a in AWARDS]
    cities = [world.entity(a, ["city"]) for a in CITIES]
    countries = [world.entity(a, ["country"]) for a in COUNTRIES]
    teams = [world.entity(a, ["team"]) for a in TEAMS]
    instruments = [world.entity(a, ["instrument"]) for a in INSTRUMENTS]
    fields_ = [world.entity(a, ["field"]) for a in FIELDS]

    def pick(pool):
        return pool[int(rng.integers(0, len(pool)))]

    questions: list[tuple[str, str, str, str]] = []

    def ask(alias: str, subj: str, rel: str, obj: str,
            templates) -> None:
        for tpl in templates:
            questions.append((tpl.format(s=alias), subj, rel, obj))

    def alias_of(name: str) -> str:
        for ent, alias in corpus.aliases:
            if ent == name and alias != name:
                return alias
        return name

    # subject facts + five questions each
    for char in characters:
        creator = rowling if char == "HarryPotter" else pick(authors)
        world.fact(char, "character_created_by", creator)
        ask(alias_of(char), char, "character_created_by", creator,
            TEMPLATES["character_created_by"])
    for book in books:
        author = pick(authors)
        world.fact(book, "book_written_by", author)
        ask(alias_of(book), book, "book_written_by", author,
            TEMPLATES["book_written_by"])
    for person in plain_people:
        city = pick(cities)
        world.fact(person, "person_born_in", city)
        ask(alias_of(person), person, "person_born_in", city,
            TEMPLATES["person_born_in"])
    for athlete in athletes:
        team = pick(teams)
        world.fact(athlete, "athlete_plays_for", team)
        ask(alias_of(athlete), athlete, "athlete_plays_for", team,
            TEMPLATES["athlete_plays_for"])
    for musician in musicians:
        inst = pick(instruments)
        world.fact(musician, "musician_plays_instrument", inst)
        ask(alias_of(musician), musician, "musician_plays_instrument", inst,
            TEMPLATES["musician_plays_instrument"])
    for film in films:
        director = pick(directors)
        world.fact(film, "film_directed_by", director)
        ask(alias_of(film), film, "film_directed_by", director,
            TEMPLATES["film_directed_by"])
    for city in cities:
        country = pick(countries)
        world.fact(city, "city_located_in", country)
        ask(alias_of(city), city, "city_located_in", country,
            TEMPLATES["city_located_in"])
    for album in albums:
        artist = pick(musicians)
        world.fact(album, "album_released_by", artist)
        ask(alias_of(album), album, "album_released_by", artist,
            TEMPLATES["album_released_by"])
    for team in teams:
        city = pick(cities)
        world.fact(team, "team_based_in", city)
        ask(alias_of(team), team, "team_based_in", city,
            TEMPLATES["team_based_in"])
    for i, award in enumerate(awards):
        winner = pick(authors + directors)
        world.fact(award, "award_won_by", winner)
        if i == 0:  # one multi-object subject
            second = pick(scientists)
            world.fact(award, "award_won_by", second)
        ask(alias_of(award), award, "award_won_by", winner,
            TEMPLATES["award_won_by"])
    for scientist in scientists:
        area = pick(fields_)
        world.fact(scientist, "scientist_works_in", area)
        ask(alias_of(scientist), scientist, "scientist_works_in", area,
            TEMPLATES["scientist_works_in"])
    for song in songs:
        artist = pick(musicians)
        world.fact(song, "song_performed_by", artist)
        ask(alias_of(song), song, "song_performed_by", artist,
            TEMPLATES["song_performed_by"])

    # alias-colliding people: questions carry a profession hint and the
    # subject model must separate them by type
    for alias, prof_a, prof_b in AMBIGUOUS_PAIRS:
        for prof in (prof_a, prof_b):
            ent = world.entity(alias, ["person", prof],
                               suffix=prof.capitalize())
            city = pick(cities)
            world.fact(ent, "person_born_in", city)
            hinted = [t.replace("{hint}", prof) for t in HINTED_BORN_TEMPLATES]
            ask(alias, ent, "person_born_in", city, hinted)
            rel = PROFESSION_RELATION[prof]
            if prof == "athlete":
                obj = pick(teams)
            elif prof == "scientist":
                obj = pick(fields_)
            else:
                obj = pick(instruments)
            world.fact(ent, rel, obj)
            hinted_rel = [t.replace("{s}", f"the {prof} {{s}}")
                          for t in TEMPLATES[rel]]
            ask(alias, ent, rel, obj, hinted_rel)

    # decoy entities whose aliases are common question words; they widen
    # n-gram candidate pools but never appear as question subjects
    decoy_film = world.entity("character", ["film"], suffix="Film")
    world.fact(decoy_film, "film_directed_by", pick(directors))
    decoy_song = world.entity("born", ["song"], suffix="Song")
    world.fact(decoy_song, "song_performed_by", pick(musicians))
    decoy_album = world.entity("city", ["album"], suffix="Album")
    world.fact(decoy_album, "album_released_by", pick(musicians))

    order = rng.permutation(len(questions))
    n_test = int(round(len(questions) * test_fraction))
    test_idx = set(order[:n_test].tolist())
    for i, row in enumerate(questions):
        (corpus.test if i in test_idx else corpus.train).append(row)
    return corpus


def write_toy_corpus(corpus: ToyCorpus, out_dir) -> dict[str, str]:
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "triples": os.path.join(out_dir, "triples.tsv"),
        "aliases": os.path.join(out_dir, "aliases.tsv"),
        "types": os.path.join(out_dir, "types.tsv"),
        "train": os.path.join(out_dir, "train.tsv"),
        "test": os.path.join(out_dir, "test.tsv"),
    }
    with open(paths["triples"], "w", encoding="utf-8") as fh:
        for s, r, o in corpus.triples:
            fh.write(f"{s}\t{r}\t{o}\n")
    with open(paths["aliases"], "w", encoding="utf-8") as fh:
        for e, a in corpus.aliases:
            fh.write(f"{e}\t{a}\n")
    with open(paths["types"], "w", encoding="utf-8") as fh:
        for e, t in corpus.types:
            fh.write(f"{e}\t{t}\n")
    for split in ("train", "test"):
        with open(paths[split], "w", encoding="utf-8") as fh:
            for question, s, r, o in getattr(corpus, split):
                fh.write(f"{question}\t{s}\t{r}\t{o}\n")
    return paths
