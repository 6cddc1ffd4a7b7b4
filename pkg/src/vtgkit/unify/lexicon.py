"""Verb lexicons backing the deterministic rule unifier.

Coverage targets everyday household, cooking and activity vocabulary; the
rule backend is an approximation, not a full morphology engine.
"""

from __future__ import annotations

# base form -> simple past
IRREGULAR_PAST: dict[str, str] = {
    "arise": "arose", "awake": "awoke", "be": "was", "bear": "bore",
    "beat": "beat", "become": "became", "begin": "began", "bend": "bent",
    "bet": "bet", "bid": "bid", "bind": "bound", "bite": "bit",
    "bleed": "bled", "blow": "blew", "break": "broke", "breed": "bred",
    "bring": "brought", "broadcast": "broadcast", "build": "built",
    "burst": "burst", "buy": "bought", "cast": "cast", "catch": "caught",
    "choose": "chose", "cling": "clung", "come": "came", "cost": "cost",
    "creep": "crept", "cut": "cut", "deal": "dealt", "dig": "dug",
    "dive": "dove", "do": "did", "draw": "drew", "drink": "drank",
    "drive": "drove", "dwell": "dwelt", "eat": "ate", "fall": "fell",
    "feed": "fed", "feel": "felt", "fight": "fought", "find": "found",
    "flee": "fled", "fling": "flung", "fly": "flew", "forbid": "forbade",
    "forecast": "forecast", "foresee": "foresaw", "foretell": "foretold",
    "forget": "forgot", "forgive": "forgave", "forgo": "forwent",
    "freeze": "froze", "get": "got", "give": "gave", "go": "went",
    "grind": "ground", "grow": "grew", "hang": "hung", "have": "had",
    "hear": "heard", "hide": "hid", "hit": "hit", "hold": "held",
    "hurt": "hurt", "input": "input", "keep": "kept", "kneel": "knelt",
    "knit": "knit", "know": "knew", "lay": "laid", "lead": "led",
    "lean": "leaned", "leap": "leapt", "leave": "left", "lend": "lent",
    "let": "let", "lie": "lay", "light": "lit", "lose": "lost",
    "make": "made", "mean": "meant", "meet": "met", "mislead": "misled",
    "mistake": "mistook", "misunderstand": "misunderstood", "mow": "mowed",
    "outdo": "outdid", "outgrow": "outgrew", "outrun": "outran",
    "overcome": "overcame", "overdo": "overdid", "overhear": "overheard",
    "oversee": "oversaw", "overtake": "overtook", "overthrow": "overthrew",
    "partake": "partook", "pay": "paid", "plead": "pleaded",
    "prove": "proved", "put": "put", "quit": "quit", "read": "read",
    "rebuild": "rebuilt", "redo": "redid", "remake": "remade",
    "repay": "repaid", "reset": "reset", "rethink": "rethought",
    "rewind": "rewound", "rewrite": "rewrote", "rid": "rid", "ride": "rode",
    "ring": "rang", "rise": "rose", "run": "ran", "saw": "sawed",
    "say": "said", "see": "saw", "seek": "sought", "sell": "sold",
    "send": "sent", "set": "set", "sew": "sewed", "shake": "shook",
    "shave": "shaved", "shear": "sheared", "shed": "shed",
    "shine": "shone", "shoot": "shot", "show": "showed",
    "shrink": "shrank", "shut": "shut", "sing": "sang", "sink": "sank",
    "sit": "sat", "slay": "slew", "sleep": "slept", "slide": "slid",
    "sling": "slung", "slit": "slit", "sow": "sowed", "speak": "spoke",
    "speed": "sped", "spend": "spent", "spin": "spun", "spit": "spat",
    "split": "split", "spread": "spread", "spring": "sprang",
    "stand": "stood", "steal": "stole", "stick": "stuck",
    "sting": "stung", "stink": "stank", "stride": "strode",
    "strike": "struck", "string": "strung", "strive": "strove",
    "sublet": "sublet", "swear": "swore", "sweep": "swept",
    "swell": "swelled", "swim": "swam", "swing": "swung", "take": "took",
    "teach": "taught", "tear": "tore", "tell": "told", "think": "thought",
    "throw": "threw", "thrust": "thrust", "tread": "trod",
    "undergo": "underwent", "underlie": "underlay",
    "understand": "understood", "undertake": "undertook", "undo": "undid",
    "unwind": "unwound", "uphold": "upheld", "upset": "upset",
    "wake": "woke", "wear": "wore", "weave": "wove", "wed": "wed",
    "weep": "wept", "wet": "wet", "win": "won", "wind": "wound",
    "withdraw": "withdrew", "withhold": "withheld",
    "withstand": "withstood", "wring": "wrung", "write": "wrote",
}

# base-form verbs that plausibly open an instruction
IMPERATIVE_VERBS: frozenset[str] = frozenset("""
add adjust apply arrange attach bake beat blend boil break bring brush carry
change check chop clean clear close combine connect cook cool cover cut dice
dip drain draw drink drizzle drop dry empty enter fill find finish fix flip
fold fry garnish get give go grab grate grease grill grind hang heat hold
insert install knead lay leave lift light load lock look lower make marinate
mash measure melt mix move open pack paint pass peel pick place plant play
plug point polish pour preheat press pull push put raise read remove repeat
replace rinse roll rotate rub saute scoop scrape screw scrub season select
serve set shake sharpen shave show shut sift simmer sit slice smooth soak
spoon spray spread sprinkle squeeze stack stand start steam stir stop strain
stretch sweep switch take tap taste throw tie tighten tilt toast toss touch
transfer trim turn twist unplug unscrew use wash watch wave wear weigh whisk
wipe wrap
""".split())

# additional verbs recognized for tense detection, not imperative-leading
GENERAL_VERBS: frozenset[str] = frozenset("""
argue bend bounce browse catch chat chew climb comb cough crawl cry dance
dress drum exercise feed gesture greet hop hug hum iron jog juggle jump kick
kiss knock laugh lean listen nap nod pet rest row run scroll shout sing skate
ski slip smell smile sneeze squat stumble surf swim talk type vacuum walk
whisper whistle yawn
""".split())

KNOWN_VERBS: frozenset[str] = frozenset(
    set(IRREGULAR_PAST) | IMPERATIVE_VERBS | GENERAL_VERBS)

PAST_FORMS: frozenset[str] = frozenset(IRREGULAR_PAST.values()) | frozenset(
    {"was", "were", "did", "had"})

PRONOUN_SUBJECTS: frozenset[str] = frozenset(
    {"i", "he", "she", "it", "we", "they", "you", "someone", "somebody"})

DETERMINERS: frozenset[str] = frozenset(
    {"a", "an", "the", "this", "that", "these", "those", "my", "his", "her",
     "its", "our", "their", "your", "one", "two", "three", "four", "five",
     "several", "some", "both", "each", "every", "another"})

WH_WORDS: frozenset[str] = frozenset(
    {"what", "when", "where", "who", "whom", "whose", "which", "why", "how"})

LEADING_AUXILIARIES: frozenset[str] = frozenset(
    {"did", "do", "does", "is", "are", "was", "were", "am", "can", "could",
     "will", "would", "should", "shall", "has", "have", "had"})

# bare person nouns promoted to an explicit subject phrase
SINGULAR_PERSON_NOUNS: frozenset[str] = frozenset(
    {"person", "man", "woman", "lady", "guy", "girl", "boy", "child", "kid",
     "baby", "chef", "worker", "player"})
PLURAL_PERSON_NOUNS: frozenset[str] = frozenset(
    {"people", "men", "women", "children", "kids", "guys", "players"})

VOWELS = frozenset("aeiou")

# final consonants doubled in CVC monosyllables (stop -> stopped)
DOUBLING_CONSONANTS = frozenset("bdgmnprt")
