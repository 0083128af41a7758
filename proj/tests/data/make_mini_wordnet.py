"""Writes the mini WordNet fixture in tests/data/mini_wordnet.

Offsets are real byte offsets into each data file, computed here, so the
fixture follows the same layout rules as the full distribution.
"""
import os

HEADER = "  1 This is a tiny test fixture in WordNet 3.0 flat-file layout.\n  2 \n"

# pos key -> list of (words, gloss)
SYNSETS = {
    "n": [
        (["bank"], 'sloping land (especially the slope beside a body of water); "they pulled the canoe up on the bank"'),
        (["depository_financial_institution", "bank"], 'a financial institution that accepts deposits; "he cashed a check at the bank"'),
        (["bank"], "a long ridge or pile"),
        (["collapse"], "a natural event caused by something suddenly falling down"),
        (["run"], 'a score in baseball made by a runner touching all four bases; "the Yankees scored 3 runs"'),
        (["glass"], "a brittle transparent solid"),
        (["box"], "a (usually rectangular) container"),
        (["church", "church_building"], "a place for public worship"),
        (["city"], "a large and densely populated urban area"),
        (["goose"], "web-footed long-necked typically gregarious migratory aquatic birds"),
        (["ice_cream"], "frozen dessert containing cream and sugar and flavoring"),
    ],
    "v": [
        (["run"], 'move fast by using one\'s feet; "Don\'t run--you\'ll be out of breath"'),
        (["run", "operate"], "direct or control; projects, businesses, etc."),
        (["bank"], "do business with a bank or keep an account at a bank"),
        (["collapse"], "break down, literally or metaphorically"),
        (["walk"], "use one's feet to advance"),
        (["go", "travel"], "change location; move, travel, or proceed"),
    ],
    "a": [
        (["quick"], "moving quickly and lightly"),
        (["happy"], "enjoying or showing or marked by joy or pleasure"),
        (["large", "big"], "above average in size or number or quantity"),
    ],
    "r": [
        (["quickly", "rapidly"], 'with rapid movements; "he works quickly"'),
        (["early"], "before the usual time"),
    ],
}

EXC = {
    "noun": ["geese goose"],
    "verb": ["running run", "went go"],
    "adj": ["bigger big", "happier happy"],
    "adv": [],
}

SUFFIX = {"n": "noun", "v": "verb", "a": "adj", "r": "adv"}


def main():
    out = os.path.join(os.path.dirname(os.path.abspath(__file__)), "mini_wordnet")
    os.makedirs(out, exist_ok=True)
    for key, synsets in SYNSETS.items():
        text = HEADER
        index = {}
        for words, gloss in synsets:
            offset = len(text.encode())
            members = " ".join(f"{w} 0" for w in words)
            line = f"{offset:08d} 03 {key} {len(words):02x} {members} 000 | {gloss}  \n"
            text += line
            for w in words:
                index.setdefault(w.lower(), []).append(offset)
        with open(os.path.join(out, f"data.{SUFFIX[key]}"), "w", newline="\n") as f:
            f.write(text)
        lines = [HEADER]
        for lemma in sorted(index):
            offs = index[lemma]
            lines.append(f"{lemma} {key} {len(offs)} 1 @ {len(offs)} 0 " + " ".join(f"{o:08d}" for o in offs) + "  \n")
        with open(os.path.join(out, f"index.{SUFFIX[key]}"), "w", newline="\n") as f:
            f.write("".join(lines))
    for name, rows in EXC.items():
        with open(os.path.join(out, f"{name}.exc"), "w", newline="\n") as f:
            f.write("".join(r + "\n" for r in rows))


if __name__ == "__main__":
    main()
