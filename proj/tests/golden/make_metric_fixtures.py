"""Scores the fixture captions with the COCO caption evaluation toolkit
(pycocoevalcap) and writes tests/data/metric_fixtures.json.

    python3 make_metric_fixtures.py <path containing pycocoevalcap> <output json>
"""

import json
import sys

sys.path.insert(0, sys.argv[1])

from pycocoevalcap.bleu.bleu import Bleu  # noqa: E402
from pycocoevalcap.cider.cider import Cider  # noqa: E402
from pycocoevalcap.rouge.rouge import Rouge  # noqa: E402

FIXTURES = [
    ("f01", "a man riding a horse on a beach",
     ["a man rides a horse on the beach", "a person riding a horse along the shore", "man on horseback at the beach"]),
    ("f02", "a cat sitting on a couch",
     ["a cat sitting on a couch", "a cat lying on a sofa"]),
    ("f03", "two dogs playing in the snow",
     ["two dogs play in the snow", "a pair of dogs running through snow", "dogs playing outside in winter"]),
    ("f04", "the the the the", ["the cat"]),
    ("f05", "a red bus", ["a red double decker bus driving down a city street", "a bus on the road"]),
    ("f06", "a plate of food with broccoli and rice and a fork and a knife on a wooden table",
     ["a plate of rice and broccoli", "food on a plate on a table"]),
    ("f07", "zebra giraffe elephant", ["a kitchen with a stove and a sink"]),
    ("f08", "a woman holding an umbrella in the rain",
     ["a woman holding an umbrella in the rain", "a woman with an umbrella walking in the rain",
      "a lady holds an umbrella on a rainy day", "person under an umbrella"]),
    ("f09", "a kitchen with a stove", ["a kitchen with a stove and a sink", "a small kitchen"]),
    ("f10", "a group of people standing around a table",
     ["people gathered around a table", "a group of people standing near a table with food"]),
    ("f11", "a baseball player swinging a bat",
     ["a baseball player swinging a bat at a ball", "a batter swings at a pitch"]),
    ("f12", "a", ["a dog"]),
    ("f13", "a dog a dog a dog", ["a dog runs", "a dog"]),
    ("f14", "a train on the tracks near a station",
     ["a train pulling into a station", "a train on the tracks", "a passenger train at the platform"]),
    ("f15", "a close up of a pizza on a table",
     ["a pizza sitting on top of a table", "close up of a pizza with cheese"]),
    ("f16", "a man and a woman sitting on a bench",
     ["a woman and a man sitting on a bench", "two people on a park bench"]),
    ("f17", "a bowl of fruit", ["a bowl of fruit", "a bowl of fruit"]),
    ("f18", "an airplane flying in the blue sky",
     ["a plane flying through a clear blue sky", "an airplane in the sky"]),
    ("f19", "a young boy is playing tennis on a court",
     ["a boy playing tennis", "a young child with a tennis racket on a tennis court"]),
    ("f20", "a giraffe standing next to a tree",
     ["a giraffe standing next to a tall tree", "a giraffe eating leaves from a tree", "giraffe near trees"]),
    ("f21", "street sign", ["a street sign on a pole at an intersection", "a stop sign"]),
    ("f22", "a laptop computer sitting on top of a desk next to a mouse",
     ["a laptop on a desk", "a computer on top of a desk with a mouse next to it"]),
]

IDENTICAL = [
    ("i01", "a dog on a couch", ["a dog on a couch"]),
    ("i02", "two cats sleeping", ["two cats sleeping"]),
    ("i03", "a man riding a bike down the street", ["a man riding a bike down the street"]),
]


def score(items):
    gts = {i: refs for i, _, refs in items}
    res = {i: [hyp] for i, hyp, _ in items}
    bleu, bleu_per = Bleu(4).compute_score(gts, res, verbose=0)
    rouge, rouge_per = Rouge().compute_score(gts, res)
    cider, cider_per = Cider().compute_score(gts, res)
    ids = list(gts.keys())
    return {
        "items": [{"id": i, "hypothesis": h, "references": r} for i, h, r in items],
        "corpus": {"bleu": list(bleu), "rouge_l": float(rouge), "cider_d": float(cider)},
        "per_image": {
            i: {
                "bleu": [bleu_per[k][n] for k in range(4)],
                "rouge_l": float(rouge_per[n]),
                "cider_d": float(cider_per[n]),
            }
            for n, i in enumerate(ids)
        },
    }


def main():
    out = {"fixtures": score(FIXTURES), "identical": score(IDENTICAL)}
    with open(sys.argv[2], "w") as f:
        json.dump(out, f, indent=1, sort_keys=True)
        f.write("\n")


if __name__ == "__main__":
    main()
