"""Text mutation for robustness tests."""
import random

TOKENS = ["{", "}", "(", ")", "%x", "@f", "->", "i32", "ptr", "ret", "br", "condbr", "switch",
          "9999999999999999999999", "-", "=", ",", ":", "\n", "slot", "func", "global", "export",
          "nan", "1e400", "...", "void", "call", "icall_fused", "tag_set", "setjmp", "\t", "\x00", "é"]


def mutate(text: str, rng: random.Random) -> str:
    t = list(text)
    for _ in range(rng.randint(1, 8)):
        k = rng.random()
        p = rng.randrange(len(t) + 1)
        if k < 0.3 and t:
            del t[p:p + rng.randint(1, 20)]
        elif k < 0.6:
            t[p:p] = list(rng.choice(TOKENS) + " ")
        elif k < 0.8 and t:
            t[p:p] = t[rng.randrange(len(t)):][:30]
        elif t:
            t[min(p, len(t) - 1)] = chr(rng.randrange(32, 127))
    return "".join(t)
