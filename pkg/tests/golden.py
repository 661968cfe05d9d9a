"""Builder for the golden-run fixture: scripted LLM responses for the
10-question synthetic dataset in tests/fixtures/golden/.

The script exercises the full pipeline surface: a two-chain conjunction
question, inverse-edge hops, answer branching, one None-fallback round (q03)
and one uncertainty-refine round (q05).
"""

import json
from pathlib import Path

FIXTURES = Path(__file__).parent / "fixtures" / "golden"

# K=5 logit profiles (AU is bounded by ln K, so K=5 is the smallest top-K
# for which the 1.55 threshold is reachable: ln 5 ~ 1.609).
CONFIDENT_LOGITS = [["a", 5.0], ["b", 1.0], ["c", 0.5], ["d", 0.2], ["e", 0.1]]
UNCERTAIN_LOGITS = [["a", 20.0], ["b", 20.0], ["c", 20.0], ["d", 20.0], ["e", 20.0]]

# question id -> (question text, [(key entity, [(sub_question, relation, answer)])], final answer)
PLAYBOOK = {
    "q01": (
        "What country bordering France contains an airport that serves Nijmegen?",
        [
            ("France", [("What country borders France?", "location.country.borders", "Belgium | Germany")]),
            ("Nijmegen", [
                ("What airport serves Nijmegen?", "aviation.airport.serves", "Weeze Airport"),
                ("What country contains that airport?", "location.country.airports", "Germany"),
            ]),
        ],
        "Germany",
    ),
    "q02": (
        "What team does Lou Seal mascot for?",
        [("Lou Seal", [("What team does Lou Seal mascot for?", "sports.mascot.team", "San Francisco Giants")])],
        "San Francisco Giants",
    ),
    "q03": (
        "What sports team does Jerry Jones own?",
        [("Jerry Jones", [("What sports team is owned by Jerry Jones?", "sports.sports_team_owner.teams_owned", "Dallas Cowboys")])],
        "Dallas Cowboys",
    ),
    "q04": (
        "Where was the owner of the Dallas Cowboys born?",
        [("Dallas Cowboys", [
            ("Who owns the Dallas Cowboys?", "sports.sports_team_owner.teams_owned", "Jerry Jones"),
            ("Where was that owner born?", "people.person.place_of_birth", "Los Angeles"),
        ])],
        "Los Angeles",
    ),
    "q05": (
        "What country is Berlin the capital of?",
        [("Berlin", [("What country is Berlin the capital of?", "location.country.capital", "Germany")])],
        "Germany",
    ),
    "q06": (
        "What river flows through Paris?",
        [("Paris", [("What river flows through Paris?", "geography.river.cities", "Seine")])],
        "Seine",
    ),
    "q07": (
        "What is the capital of the country where the Colosseum is located?",
        [("Colosseum", [
            ("What country is the Colosseum located in?", "location.location.containedby", "Italy"),
            ("What is the capital of that country?", "location.country.capital", "Rome"),
        ])],
        "Rome",
    ),
    "q08": (
        "Who directed the film Inception?",
        [("Inception", [("Who directed the film Inception?", "film.film.directed_by", "Christopher Nolan")])],
        "Christopher Nolan",
    ),
    "q09": (
        "What city is the university attended by Barack Obama located in?",
        [("Barack Obama", [
            ("What university did Barack Obama attend?", "education.person.university", "Harvard University"),
            ("What city is that university located in?", "location.location.containedby", "Cambridge"),
        ])],
        "Cambridge",
    ),
    "q10": (
        "What language is spoken in Brazil?",
        [("Brazil", [("What language is spoken in Brazil?", "location.country.official_language", "Portuguese")])],
        "Portuguese",
    ),
}


def _decomposition_text(chains):
    lines, idx = [], 1
    for entity, steps in chains:
        for sub_question, _, _ in steps:
            lines.append(f"SUB-QUESTION{idx}: {sub_question}")
            lines.append(f"ENTITY{idx}: {entity}")
            idx += 1
    return "Return:\n" + "\n".join(lines)


def golden_rules():
    rules = []
    for qid, (question, chains, final) in PLAYBOOK.items():
        rules.append({
            "template": "decomposition",
            "contains": [question],
            "text": _decomposition_text(chains),
        })
        for _, steps in chains:
            for sub_question, relation, answer in steps:
                if qid == "q03":
                    # First relation-pruning round picks a dud relation; the
                    # triple pruner answers None; the fallback round (candidates
                    # no longer include the dud) finds the right relation.
                    rules.append({
                        "template": "relation_pruning",
                        "contains": [f"Question: {sub_question}"],
                        "not_contains": ["people.person.place_of_birth"],
                        "text": f"Return: {relation}",
                    })
                    rules.append({
                        "template": "relation_pruning",
                        "contains": [f"Question: {sub_question}"],
                        "text": "Return: people.person.place_of_birth",
                    })
                    rules.append({
                        "template": "triple_pruning",
                        "contains": [f"Question: {sub_question}", "place of birth"],
                        "text": "Answer: None",
                        "logits": CONFIDENT_LOGITS,
                    })
                    rules.append({
                        "template": "triple_pruning",
                        "contains": [f"Question: {sub_question}"],
                        "text": f"Answer: {answer}",
                        "logits": CONFIDENT_LOGITS,
                    })
                    continue
                rules.append({
                    "template": "relation_pruning",
                    "contains": [f"Question: {sub_question}"],
                    "text": f"Return: {relation}",
                })
                if qid == "q05":
                    # High first-token uncertainty forces the refine pass.
                    rules.append({
                        "template": "triple_pruning",
                        "contains": [f"Question: {sub_question}"],
                        "text": f"Answer: {answer}",
                        "logits": UNCERTAIN_LOGITS,
                    })
                    rules.append({
                        "template": "triple_pruning_refine",
                        "contains": [f"Question: {sub_question}"],
                        "text": f"Answer: {answer}",
                    })
                else:
                    rules.append({
                        "template": "triple_pruning",
                        "contains": [f"Question: {sub_question}"],
                        "text": f"Answer: {answer}",
                        "logits": CONFIDENT_LOGITS,
                    })
        rules.append({
            "template": "final_answer",
            "contains": [f"Question: {question}"],
            "text": f"Answer: {final}",
        })
    return rules


def corrupted_rules():
    """Golden rules with two deliberate failures for the error taxonomy:
    q02 answers wrongly despite good paths (reasoning error) and q10 retrieves
    nothing and reports unanswerable (retrieval error)."""
    q02 = PLAYBOOK["q02"][0]
    q10 = PLAYBOOK["q10"][0]
    q10_subq = PLAYBOOK["q10"][1][0][1][0][0]
    overrides = [
        {"template": "final_answer", "contains": [f"Question: {q02}"],
         "text": "Answer: Los Angeles Dodgers"},
        {"template": "relation_pruning", "contains": [f"Question: {q10_subq}"],
         "text": "Return: None"},
        {"template": "final_answer", "contains": [f"Question: {q10}"],
         "text": "Answer: unanswerable"},
    ]
    return overrides + golden_rules()


def write_script(path, rules=None):
    path = Path(path)
    path.write_text(
        json.dumps({"responses": rules if rules is not None else golden_rules()}, indent=1),
        encoding="utf-8",
    )
    return path
