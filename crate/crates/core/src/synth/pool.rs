pub(super) const SENTENCES: &[&str] = &[
    "The river widens below the old mill and slows to a walking pace.",
    "Most bread recipes need only flour, water, salt and a little patience.",
    "A good map shows what the traveller needs and leaves out the rest.",
    "Bees visit the clover first, then move to the taller flowers by noon.",
    "The library keeps its oldest books in a cool room without windows.",
    "Granite forms when molten rock cools slowly deep underground.",
    "She tuned the violin twice before the rehearsal began.",
    "Wind turbines turn more steadily on the ridge than in the valley.",
    "Early trains ran on timetables printed in the local newspaper.",
    "A compost heap works faster when it is turned every few weeks.",
    "The committee agreed to meet again after the harvest.",
    "Light travels from the sun to the earth in about eight minutes.",
    "Children learned arithmetic on slates before paper was cheap.",
    "The bridge was painted grey to match the winter sky.",
    "Fresh herbs lose their flavour quickly once they are chopped.",
    "Sailors once judged their speed by counting knots on a rope.",
    "The museum added a new wing for textiles and early tools.",
    "Frogs call loudest on warm nights after heavy rain.",
    "Each chapter ends with a short list of questions for discussion.",
    "The recipe calls for two eggs, but one will do in a pinch.",
    "Snow on the north slope lasts well into the spring.",
    "Copper wires carry the signal from the antenna to the receiver.",
    "He kept a notebook of every bird he saw along the coast.",
    "The orchard produces more apples in alternate years.",
    "Clay pots keep water cool by letting a little of it evaporate.",
    "The town clock has not been wound since the storm last autumn.",
    "Most moths rest during the day and fly after dusk.",
    "A steady hand matters more than speed when sharpening a blade.",
    "Rainfall in the region has varied widely over the past decade.",
    "The market opens at dawn and closes when the fish run out.",
    "Glass was once so costly that windows were taxed by number.",
    "The choir practised in the church hall every Thursday evening.",
    "Lichens grow slowly but can live for many centuries.",
    "The surveyor marked each corner of the field with a stone.",
    "Oats grow well in cool, damp climates where wheat struggles.",
    "The lighthouse keeper logged the weather every four hours.",
    "Patterns in tree rings record dry and wet years alike.",
    "The workshop smelled of sawdust, oil and fresh varnish.",
    "Many old roads follow paths first worn by grazing animals.",
    "The letter arrived three weeks after it was posted.",
    "Salt was used to preserve meat long before refrigeration.",
    "The telescope revealed four small moons circling the planet.",
    "A quiet room helps most people read for longer stretches.",
    "The potter fired the kiln slowly to keep the bowls from cracking.",
    "Migrating geese fly in a wedge to share the work of leading.",
    "The farmhouse kitchen was the warmest room in winter.",
    "Tides rise and fall twice a day along most of the coast.",
    "The carpenter measured the doorway three times before cutting.",
    "Old ledgers show the price of tea rising every decade.",
    "The garden path was laid with bricks from the ruined barn.",
    "Moss grows thickest on the shaded side of the wall.",
    "The ferry crossing takes forty minutes in calm weather.",
    "Students gathered around the fossil to sketch its outline.",
    "Thunder follows lightning because sound travels more slowly.",
    "The baker rose before four to light the ovens.",
    "A thick fog settled over the harbour by late afternoon.",
    "The recipe was handed down through four generations.",
    "Wool keeps its warmth even when it becomes damp.",
    "The stone steps were worn smooth by centuries of feet.",
    "The shepherd counted the flock again at sunset.",
];

pub(super) const PRODUCTS: &[&str] = &[
    "running shoes",
    "garden furniture",
    "phone cases",
    "kitchen knives",
    "winter jackets",
    "vitamin packs",
    "gaming chairs",
    "smart watches",
];

pub(super) const DOMAINS: &[&str] = &[
    "shop-deals",
    "clicktrack",
    "promo-hub",
    "adserve",
    "bestoffers",
    "linkly",
];

pub(super) const TLDS: &[&str] = &["com", "net", "io", "biz"];

pub(super) const NAV_ITEMS: &[&str] = &[
    "Products", "About Us", "Blog", "Pricing", "Support", "Careers", "Shop", "News", "Login",
];
