#!/usr/bin/env python3
"""Build the 5-dialogue upstream-format sample and its hand-converted expectation.

The upstream layout mirrors the MultiWOZ 2.1 data.json structure: per dialogue a
"log" list alternating user/system turns, with the cumulative belief state in the
metadata of each system turn ("semi" plus "book" sections per domain).
"""

import json
import os

OUT = os.path.join(os.path.dirname(__file__), "..", "fixtures")

EMPTY_TAXI = {"book": {"booked": []}, "semi": {"leaveAt": "", "destination": "", "departure": "", "arriveBy": ""}}
EMPTY_POLICE = {"book": {"booked": []}, "semi": {}}
EMPTY_HOSPITAL = {"book": {"booked": []}, "semi": {"department": ""}}
EMPTY_RESTAURANT = {"book": {"booked": [], "people": "", "day": "", "time": ""},
                    "semi": {"food": "", "pricerange": "", "name": "", "area": ""}}
EMPTY_HOTEL = {"book": {"booked": [], "people": "", "day": "", "stay": ""},
               "semi": {"name": "", "area": "", "parking": "", "pricerange": "",
                        "stars": "", "internet": "", "type": ""}}
EMPTY_ATTRACTION = {"book": {"booked": []}, "semi": {"type": "", "name": "", "area": ""}}
EMPTY_TRAIN = {"book": {"booked": [], "people": ""},
               "semi": {"leaveAt": "", "destination": "", "day": "", "arriveBy": "", "departure": ""}}
EMPTY_BUS = {"book": {"booked": []}, "semi": {"departure": "", "destination": "", "day": "", "leaveAt": ""}}


def meta(**overrides):
    base = {
        "taxi": json.loads(json.dumps(EMPTY_TAXI)),
        "police": json.loads(json.dumps(EMPTY_POLICE)),
        "restaurant": json.loads(json.dumps(EMPTY_RESTAURANT)),
        "hospital": json.loads(json.dumps(EMPTY_HOSPITAL)),
        "hotel": json.loads(json.dumps(EMPTY_HOTEL)),
        "attraction": json.loads(json.dumps(EMPTY_ATTRACTION)),
        "train": json.loads(json.dumps(EMPTY_TRAIN)),
        "bus": json.loads(json.dumps(EMPTY_BUS)),
    }
    for domain, sections in overrides.items():
        for section, kv in sections.items():
            base[domain][section].update(kv)
    return base


def user(text):
    return {"text": text, "metadata": {}}


def system(text, metadata):
    return {"text": text, "metadata": metadata}


UPSTREAM = {
    "SNG0451.json": {
        "goal": {},
        "log": [
            user("I need a taxi from holy trinity church to the fez club after 19:15."),
            system("Where would you like to go?",
                   meta(taxi={"semi": {"departure": "holy trinity church",
                                       "destination": "the fez club", "leaveAt": "19:15"}})),
            user("Actually make that after 21:00 please."),
            system("A grey ford will pick you up at 21:00.",
                   meta(taxi={"semi": {"departure": "holy trinity church",
                                       "destination": "the fez club", "leaveAt": "21:00"}})),
        ],
    },
    "SNG0452.json": {
        "goal": {},
        "log": [
            user("I want to find a cheap restaurant in the centre. The food type does not matter."),
            system("There are several cheap restaurants in the centre. Any preference?",
                   meta(restaurant={"semi": {"pricerange": "cheap", "area": "centre",
                                             "food": "dont care"}})),
            user("Book the first one for 4 people at 12:15 on wednesday."),
            system("Done! Your reference number is ABC1234.",
                   meta(restaurant={"semi": {"pricerange": "cheap", "area": "centre",
                                             "food": "dont care"},
                                    "book": {"people": "4", "time": "12:15", "day": "wednesday"}})),
        ],
    },
    "SNG0453.json": {
        "goal": {},
        "log": [
            user("I was just robbed! Can you help me contact the police?"),
            system("The Parkside Police Station number is 01223358966.",
                   meta()),
        ],
    },
    "MUL0454.json": {
        "goal": {},
        "log": [
            user("I need a train to cambridge on friday."),
            system("Where are you departing from?",
                   meta(train={"semi": {"destination": "cambridge", "day": "friday"}})),
            user("From stansted airport. I also need a 4 star hotel with free wifi."),
            system("There are 10 trains and several hotels. Anything else?",
                   meta(train={"semi": {"destination": "cambridge", "day": "friday",
                                        "departure": "stansted airport"}},
                        hotel={"semi": {"stars": "4", "internet": "yes"}})),
            user("Book the train for 3 people and find me a hotel in the north."),
            system("Booked! Reference number is XYZ987. The ashley hotel is in the north.",
                   meta(train={"semi": {"destination": "cambridge", "day": "friday",
                                        "departure": "stansted airport"},
                               "book": {"people": "3"}},
                        hotel={"semi": {"stars": "4", "internet": "yes", "area": "north"}})),
        ],
    },
    "SNG0455.json": {
        "goal": {},
        "log": [
            user("Are there any museums in the west? Price range does not matter."),
            system("There are 5 museums in the west. Cafe jello gallery is free.",
                   meta(attraction={"semi": {"type": "museum", "area": "west"}})),
            user("Great, that is all I needed, thanks."),
            system("You are welcome. Goodbye!",
                   meta(attraction={"semi": {"type": "museum", "area": "west"}})),
        ],
    },
}

EXPECTED = {
    "dialogues": [
        {
            "id": "SNG0451",
            "domains": ["taxi"],
            "turns": [
                {"system": "",
                 "user": "I need a taxi from holy trinity church to the fez club after 19:15.",
                 "state": {"taxi-departure": "holy trinity church",
                           "taxi-destination": "the fez club", "taxi-leaveAt": "19:15"}},
                {"system": "Where would you like to go?",
                 "user": "Actually make that after 21:00 please.",
                 "state": {"taxi-departure": "holy trinity church",
                           "taxi-destination": "the fez club", "taxi-leaveAt": "21:00"}},
            ],
        },
        {
            "id": "SNG0452",
            "domains": ["restaurant"],
            "turns": [
                {"system": "",
                 "user": "I want to find a cheap restaurant in the centre. The food type does not matter.",
                 "state": {"restaurant-pricerange": "cheap", "restaurant-area": "centre",
                           "restaurant-food": "dontcare"}},
                {"system": "There are several cheap restaurants in the centre. Any preference?",
                 "user": "Book the first one for 4 people at 12:15 on wednesday.",
                 "state": {"restaurant-pricerange": "cheap", "restaurant-area": "centre",
                           "restaurant-food": "dontcare", "restaurant-book_people": "4",
                           "restaurant-book_time": "12:15", "restaurant-book_day": "wednesday"}},
            ],
        },
        {
            "id": "SNG0453",
            "domains": [],
            "turns": [
                {"system": "",
                 "user": "I was just robbed! Can you help me contact the police?",
                 "state": {}},
            ],
        },
        {
            "id": "MUL0454",
            "domains": ["train", "hotel"],
            "turns": [
                {"system": "",
                 "user": "I need a train to cambridge on friday.",
                 "state": {"train-destination": "cambridge", "train-day": "friday"}},
                {"system": "Where are you departing from?",
                 "user": "From stansted airport. I also need a 4 star hotel with free wifi.",
                 "state": {"train-destination": "cambridge", "train-day": "friday",
                           "train-departure": "stansted airport",
                           "hotel-stars": "4", "hotel-internet": "yes"}},
                {"system": "There are 10 trains and several hotels. Anything else?",
                 "user": "Book the train for 3 people and find me a hotel in the north.",
                 "state": {"train-destination": "cambridge", "train-day": "friday",
                           "train-departure": "stansted airport", "train-book_people": "3",
                           "hotel-stars": "4", "hotel-internet": "yes", "hotel-area": "north"}},
            ],
        },
        {
            "id": "SNG0455",
            "domains": ["attraction"],
            "turns": [
                {"system": "",
                 "user": "Are there any museums in the west? Price range does not matter.",
                 "state": {"attraction-type": "museum", "attraction-area": "west"}},
                {"system": "There are 5 museums in the west. Cafe jello gallery is free.",
                 "user": "Great, that is all I needed, thanks.",
                 "state": {"attraction-type": "museum", "attraction-area": "west"}},
            ],
        },
    ]
}


def main():
    with open(os.path.join(OUT, "upstream.sample.json"), "w", encoding="utf-8") as fh:
        json.dump(UPSTREAM, fh, indent=2, ensure_ascii=False)
        fh.write("\n")
    with open(os.path.join(OUT, "upstream.expected.json"), "w", encoding="utf-8") as fh:
        json.dump(EXPECTED, fh, indent=2, ensure_ascii=False)
        fh.write("\n")
    print("wrote upstream sample + expected")


if __name__ == "__main__":
    main()
