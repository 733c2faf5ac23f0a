#!/usr/bin/env python3
"""Regenerate the bundled dialogue corpus and replay-transcript fixtures.

Each dialogue is a list of turns (system utterance, user utterance,
cumulative gold state) plus the recorded assistant response per turn.
Run from the repository root:  python3 tools/make_fixtures.py
"""

import json
import os

OUT = os.path.join(os.path.dirname(__file__), "..", "fixtures")

MODEL_ID = "Jan 9"
STAMP = "2023-01-20T00:00:00Z"


def d(id_, domains, turns):
    return {"id": id_, "domains": domains, "turns": turns}


def t(system, user, state, response):
    return {"system": system, "user": user, "state": state, "response": response}


def jblock(pairs, indent=0):
    """Render a response JSON object the way the recorded sessions printed them."""
    pad = " " * indent
    lines = [pad + "{"]
    items = list(pairs.items())
    for i, (k, v) in enumerate(items):
        comma = "," if i + 1 < len(items) else ""
        lines.append(f'{pad}{json.dumps(k)}: {json.dumps(v)}{comma}')
    lines.append(pad + "}")
    return "\n".join(lines)


MUL2122 = d("MUL2122", ["train", "hotel"], [
    t("",
      "Hello!  I am looking for train schedules from Leicester.  Can you help me with that?",
      {"train-departure": "leicester"},
      "The following slots were updated by the user:\n"
      + jblock({"train-departure": "Leicester", "train-destination": "?", "train-day": "?",
                "train-leaveAt": "?", "train-arriveBy": "?", "train-book_people": "?"})),
    t("Sure! There are several trains leaving from leicester. What destination, day and time would you like me to search?",
      "I like a train going to cambridge on tuesday please.",
      {"train-departure": "leicester", "train-destination": "cambridge", "train-day": "tuesday"},
      "The following slots were updated by the user:\n"
      + jblock({"train-destination": "cambridge", "train-day": "tuesday",
                "train-leaveAt": "dontcare", "train-arriveBy": "dontcare"})),
    t("Okay.  It looks as if there are trains leaving Leicester for Cambridge every hour starting at 5:09 and ending at 23:09 on Tuesday. ",
      "Pick one. I need the travel time and arrival time. Any one after 20:15.",
      {"train-departure": "leicester", "train-destination": "cambridge", "train-day": "tuesday",
       "train-leaveAt": "20:15"},
      "The following slots were updated by the user:\n"
      + jblock({"train-leaveAt": "dontcare", "train-arriveBy": "20:15"})),
    t("You have one leaving at 21:09, what time do you want to arrive by?",
      "Thank you that will work fine for me and my husband",
      {"train-departure": "leicester", "train-destination": "cambridge", "train-day": "tuesday",
       "train-leaveAt": "20:15", "train-book_people": "2"},
      "The following slots were updated by the user:\n{\"train-book_people\":\"2\"}"),
    t("The booking was successful. Your reference number is RWRKP9L6",
      "I also need a hotel with free wifi and free parking. ",
      {"train-departure": "leicester", "train-destination": "cambridge", "train-day": "tuesday",
       "train-leaveAt": "20:15", "train-book_people": "2",
       "hotel-parking": "yes", "hotel-internet": "yes"},
      "The following slots were updated by the user:\n"
      + jblock({"hotel-parking": "yes", "hotel-internet": "yes"})),
    t("I have several excellent options. Did you have an area of town in mind?",
      "No, I just would like a guesthouse. ",
      {"train-departure": "leicester", "train-destination": "cambridge", "train-day": "tuesday",
       "train-leaveAt": "20:15", "train-book_people": "2",
       "hotel-parking": "yes", "hotel-internet": "yes",
       "hotel-type": "guest house", "hotel-area": "dontcare"},
      "The following slots were updated by the user:\n"
      + jblock({"hotel-type": "guest house", "hotel-area": "dontcare"})),
    t("Sure, I'd suggest Acorn Guest House at 154 Chesterton Road CB41DA. It's moderately priced with 4 stars. Would that work for you?",
      "Can you please make a reservation for just me, for 4 nights starting tuesday?",
      {"train-departure": "leicester", "train-destination": "cambridge", "train-day": "tuesday",
       "train-leaveAt": "20:15", "train-book_people": "2",
       "hotel-parking": "yes", "hotel-internet": "yes",
       "hotel-type": "guest house", "hotel-area": "dontcare",
       "hotel-name": "acorn guest house", "hotel-book_day": "tuesday",
       "hotel-book_stay": "4", "hotel-book_people": "1"},
      "The following slots were updated by the user:\n"
      + jblock({"hotel-name": "Acorn Guest House", "hotel-book_day": "Tuesday",
                "hotel-book_stay": "4", "hotel-book_people": "1"})),
    t("Your reference number is HYEDH9O5, anything else I can help you with?",
      "No thank you, you have been very helpful. Have a great day.",
      {"train-departure": "leicester", "train-destination": "cambridge", "train-day": "tuesday",
       "train-leaveAt": "20:15", "train-book_people": "2",
       "hotel-parking": "yes", "hotel-internet": "yes",
       "hotel-type": "guest house", "hotel-area": "dontcare",
       "hotel-name": "acorn guest house", "hotel-book_day": "tuesday",
       "hotel-book_stay": "4", "hotel-book_people": "1"},
      "An empty JSON list, no new slot is updated by the user."),
])

MUL2405 = d("MUL2405", ["restaurant", "attraction"], [
    t("",
      "Hi. I am having trouble finding a place to eat called prezzo. Can you locate it for me and tell me a little about it please?",
      {"restaurant-name": "prezzo"},
      "There were no \"slots\" updated in the \"user\"'s latest response to the \"system\". "
      "As per the provided user sentence, the user is seeking information and is not providing any details. "
      "Thus the response should be an empty JSON list {}"),
    t("Prezzo is located at 21 - 24 Northampton Road, in the west. It's an italian restaurant. Moderate price range.",
      "That sounds perfect!",
      {"restaurant-name": "prezzo", "restaurant-area": "west", "restaurant-food": "italian",
       "restaurant-pricerange": "moderate"},
      "The \"slots\" updated by the \"user\" in this response are the following:\n\nCopy code\n"
      + jblock({"restaurant-name": "prezzo", "restaurant-area": "west",
                "restaurant-food": "italian", "restaurant-pricerange": "moderate"}, indent=4)
      + "\nIt's worth noting that these slots are updated only because system provided that information "
      "in the previous message, if the system have not provided this information, the updated slots "
      "should be filled by \"?\""),
    t("Would you like me to book you a table?",
      "Not this time but I would like to visit an attraction while in Centre, can you find one for me?",
      {"restaurant-name": "prezzo", "restaurant-area": "west", "restaurant-food": "italian",
       "restaurant-pricerange": "moderate", "attraction-area": "centre"},
      "The \"slots\" updated by the \"user\" in this response are the following:\n\nCopy code\n"
      + jblock({"restaurant-book_people": "dontcare", "restaurant-book_day": "dontcare",
                "restaurant-book_time": "dontcare", "attraction-area": "centre"}, indent=4)
      + "\nIt's worth noting that restaurant-book_people,restaurant-book_day,restaurant-book_time "
      "are updated with \"dontcare\" since the user doesn't care about booking a table."),
    t("Okay, there's about 44 attractions in the centre of town.  Is there something in particular you'd like?",
      "no, but I will need the address.",
      {"restaurant-name": "prezzo", "restaurant-area": "west", "restaurant-food": "italian",
       "restaurant-pricerange": "moderate", "attraction-area": "centre"},
      "The \"slots\" updated by the \"user\" in this response are the following:\n\nCopy code\n"
      + jblock({"attraction-type": "?", "attraction-name": "?"}, indent=4)
      + "\nIn this response the user didn't give any specific attraction details, so the \"slots\" of "
      "attraction-type and attraction-name are filled with \"?\" as the user didn't specify any preferences."),
    t("I think you would enjoy Old Schools in the centre of town.  It is an architectural attraction.  The address is trinity lane.",
      "Great, that sounds perfect. Thanks!",
      {"restaurant-name": "prezzo", "restaurant-area": "west", "restaurant-food": "italian",
       "restaurant-pricerange": "moderate", "attraction-area": "centre",
       "attraction-type": "architecture", "attraction-name": "old schools"},
      "The \"slots\" updated by the \"user\" in this response are the following:\n\nCopy code\n"
      + jblock({"attraction-type": "architectural", "attraction-name": "Old Schools",
                "attraction-address": "trinity lane"}, indent=4)
      + "\nThe user is indicating that this attraction is the one they are interested in and thank the "
      "system, thus the slots are updated with the provided information."),
    t("Post code is cb21tt, Trinity lane. Is there anything else I can tell you?",
      "Not today , thank you so much for your help. I appreciate everything you do.",
      {"restaurant-name": "prezzo", "restaurant-area": "west", "restaurant-food": "italian",
       "restaurant-pricerange": "moderate", "attraction-area": "centre",
       "attraction-type": "architecture", "attraction-name": "old schools"},
      "The \"slots\" updated by the user in this response are the following:\n\nCopy code\n"
      + jblock({"attraction-postcode": "cb21tt"}, indent=4)
      + "\nThe user is indicating the end of their conversation and expressing gratitude, so the system "
      "does not receive any new request."),
    t("Absolutely positively no problem at all! Thanks for using our service. Enjoy your time!",
      "Thanks, I'm all set here. You can end the conversation now.",
      {"restaurant-name": "prezzo", "restaurant-area": "west", "restaurant-food": "italian",
       "restaurant-pricerange": "moderate", "attraction-area": "centre",
       "attraction-type": "architecture", "attraction-name": "old schools"},
      "There were no \"slots\" updated by the user in this response. The user is indicating the end of "
      "the conversation. Thus the response should be an empty JSON list {}"),
])

PMUL4050 = d("PMUL4050", ["hotel", "attraction"], [
    t("I'd recommend the Autumn House. Would you like to make a booking?",
      "Yes please. I need the reservation to be for 8 people and 2 nights starting on Tuesday. ",
      {"hotel-name": "autumn house", "hotel-book_people": "8", "hotel-book_stay": "2",
       "hotel-book_day": "tuesday"},
      jblock({"hotel-book_people": "8", "hotel-book_stay": "2", "hotel-book_day": "Tuesday"})),
    t("Great. I successfully booked your stay. Your reference number is 2OVWNFW1. Is there anything else I can help you with?",
      "I am looking for a particular attraction. Its name is called lynne strover gallery",
      {"hotel-name": "autumn house", "hotel-book_people": "8", "hotel-book_stay": "2",
       "hotel-book_day": "tuesday", "attraction-name": "lynne strover gallery"},
      jblock({"attraction-name": "lynne strover gallery", "attraction-type": "?"})),
    t("The Lynne Strover Gallery is a wonderful museum in the West area of town, it is free to enter.  Would you like the phone number and address perhaps?",
      "Yes, I would also like to know what kind of attraction it is and the entrance fee.",
      {"hotel-name": "autumn house", "hotel-book_people": "8", "hotel-book_stay": "2",
       "hotel-book_day": "tuesday", "attraction-name": "lynne strover gallery"},
      jblock({"attraction-type": "?", "attraction-fee": "?"})),
    t("It is a museum and it is free entry.",
      "What area is it in?",
      {"hotel-name": "autumn house", "hotel-book_people": "8", "hotel-book_stay": "2",
       "hotel-book_day": "tuesday", "attraction-name": "lynne strover gallery"},
      jblock({"attraction-area": "west"})),
    t("As stated previously, it is on the west side of town. Is there anything else I can do for you?",
      "No that's all the help I need. Thanks for your help. ",
      {"hotel-name": "autumn house", "hotel-book_people": "8", "hotel-book_stay": "2",
       "hotel-book_day": "tuesday", "attraction-name": "lynne strover gallery"},
      "{}"),
])

PMUL0117 = d("PMUL0117", ["hotel", "restaurant", "taxi"], [
    t("",
      "I am looking for a place to stay called the gonville hotel.",
      {"hotel-name": "the gonville hotel"},
      jblock({"hotel-name": "the gonville hotel"})),
    t("The gonville hotel is an expensive hotel in the centre of town. Would you like me to book it for you?",
      "Yes, book it for 2 people for 3 nights starting saturday.",
      {"hotel-name": "the gonville hotel", "hotel-book_people": "2", "hotel-book_stay": "3",
       "hotel-book_day": "saturday"},
      jblock({"hotel-book_people": "2", "hotel-book_stay": "3", "hotel-book_day": "saturday"})),
    t("Booking was successful. Your reference number is X9QPLMNB. Is there anything else I can help you with?",
      "Yes, I am also looking for a restaurant called la mimosa. Can you book a table for 2 at 18:15 the same day?",
      {"hotel-name": "the gonville hotel", "hotel-book_people": "2", "hotel-book_stay": "3",
       "hotel-book_day": "saturday", "restaurant-name": "la mimosa",
       "restaurant-book_people": "2", "restaurant-book_time": "18:15",
       "restaurant-book_day": "saturday"},
      jblock({"restaurant-name": "la mimosa", "restaurant-book_people": "2",
              "restaurant-book_time": "18:15", "restaurant-book_day": "saturday"})),
    t("Your table is booked. The reference number is 7GAWK763. Anything else I can help with?",
      "Yes I also need a taxi that will get me to the restaurant by the booked time please.",
      {"hotel-name": "the gonville hotel", "hotel-book_people": "2", "hotel-book_stay": "3",
       "hotel-book_day": "saturday", "restaurant-name": "la mimosa",
       "restaurant-book_people": "2", "restaurant-book_time": "18:15",
       "restaurant-book_day": "saturday",
       "taxi-destination": "the gonville hotel", "taxi-departure": "la mimosa"},
      jblock({"taxi-destination": "hotel", "taxi-departure": "restaurant"})),
])

SNG01873 = d("SNG01873", ["taxi"], [
    t("",
      "I need to be picked up from pizza hut city centre after 04:30",
      {"taxi-departure": "pizza hut city centre", "taxi-leaveAt": "04:30"},
      jblock({
          "taxi-leaveAt": "04:30",
          "taxi-destination": "pizza hut city centre",
          "taxi-departure": "?",
          "taxi-arriveBy": "dontcare",
          "restaurant-book_people": "dontcare",
          "restaurant-book_day": "dontcare",
          "restaurant-book_time": "dontcare",
          "restaurant-food": "dontcare",
          "restaurant-pricerange": "dontcare",
          "restaurant-name": "dontcare",
          "restaurant-area": "dontcare",
          "hotel-book_people": "dontcare",
          "hotel-book_day": "dontcare",
          "hotel-book_stay": "dontcare",
          "hotel-name": "dontcare",
          "hotel-area": "dontcare",
          "hotel-parking": "dontcare",
          "hotel-pricerange": "dontcare",
          "hotel-stars": "dontcare",
          "hotel-internet": "dontcare",
          "hotel-type": "dontcare",
          "attraction-type": "dontcare",
          "attraction-name": "dontcare",
          "attraction-area": "dontcare",
          "train-book_people": "dontcare",
          "train-leaveAt": "dontcare",
          "train-destination": "dontcare",
          "train-day": "dontcare",
          "train-arriveBy": "dontcare",
          "train-departure": "dontcare",
      })),
])

MUL2051 = d("MUL2051", ["hotel"], [
    t("",
      "I am looking for a guesthouse in the north with free parking.",
      {"hotel-type": "guest house", "hotel-area": "north", "hotel-parking": "yes"},
      jblock({"hotel-type": "guest house", "hotel-area": "north", "hotel-parking": "yes"})),
    t("I'd recommend the acorn guest house. It is moderately priced with a 4 star rating.",
      "Can I get address and postcode for the hotel?",
      {"hotel-type": "guest house", "hotel-area": "north", "hotel-parking": "yes"},
      jblock({"hotel-address": "?", "hotel-postcode": "?"})),
    t("The address is 74 chesterton road, the postal code is cb41er, can I assist with anything else?",
      "That is all for now, goodbye.",
      {"hotel-type": "guest house", "hotel-area": "north", "hotel-parking": "yes"},
      jblock({"hotel-address": "74 chesterton road", "hotel-postcode": "cb41er"})),
])

MUL0524 = d("MUL0524", ["train"], [
    t("The cambridge and county folk museum is located at 2-3 castle street postcode cb30aq , it has an entrance fee of 3.50 pounds. ",
      "Thanks.  Now I need to book a train from Norwich.",
      {"train-departure": "norwich"},
      jblock({"train-departure": "Norwich", "train-destination": "?", "train-leaveAt": "?",
              "train-day": "?", "train-arriveBy": "?", "train-book_people": "?"})),
    t("There are 133 trains leaving norwich. What day and time are you interested in?",
      "I'm going to Cambridge on saturday and want to arrive by 14:15 please.",
      {"train-departure": "norwich", "train-destination": "cambridge", "train-day": "saturday",
       "train-arriveBy": "14:15"},
      jblock({"train-destination": "Cambridge", "train-day": "Saturday", "train-arriveBy": "14:15"})),
])

PMUL4246 = d("PMUL4246", ["attraction"], [
    t("",
      "i need a place to go and should be a museum",
      {"attraction-type": "museum"},
      jblock({"attraction-type": "museum"})),
    t("Okay! There are several museums in Cambridge. What part of town would you like to visit?",
      "How about ones in the centre, what's available?",
      {"attraction-type": "museum", "attraction-area": "centre"},
      jblock({"attraction-type": "museum", "attraction-area": "centre"})),
])

MUL2116 = d("MUL2116", ["hotel"], [
    t("",
      "Yes, can you tell me information on Cambridge lodgings?  We are looking for free wifi and a nice guesthouse.",
      {"hotel-internet": "yes", "hotel-type": "guest house"},
      jblock({"hotel-name": "?", "hotel-area": "?", "hotel-parking": "dontcare",
              "hotel-pricerange": "dontcare", "hotel-stars": "dontcare",
              "hotel-internet": "yes", "hotel-type": "guest house"})),
    t("Sure. What area and price range are you looking for?",
      "I don't really care about area or price range, the most important thing for me is free wifi in a guesthouse that has free parking.",
      {"hotel-internet": "yes", "hotel-type": "guest house", "hotel-area": "dontcare",
       "hotel-pricerange": "dontcare", "hotel-parking": "yes"},
      jblock({"hotel-name": "?", "hotel-area": "dontcare", "hotel-parking": "yes",
              "hotel-pricerange": "dontcare", "hotel-stars": "dontcare",
              "hotel-internet": "yes", "hotel-type": "guest house"})),
    t("I've got over 20 guesthouses that will work with those requirements.  Would you like me to book a moderately priced 4 star? ",
      "As long as it has free wifi and parking then yes.",
      {"hotel-internet": "yes", "hotel-type": "guest house", "hotel-area": "dontcare",
       "hotel-pricerange": "moderate", "hotel-parking": "yes", "hotel-stars": "4"},
      jblock({"hotel-name": "?", "hotel-area": "dontcare", "hotel-parking": "yes",
              "hotel-pricerange": "moderate", "hotel-stars": "4",
              "hotel-internet": "yes", "hotel-type": "guest house"})),
    t("I would recommend the Acorn Guest House on the north side of town.  It has 4-stars.  Should I book this?",
      "Yes. Please book it for 8 people for 5 nights starting from sunday.",
      {"hotel-internet": "yes", "hotel-type": "guest house", "hotel-area": "dontcare",
       "hotel-pricerange": "moderate", "hotel-parking": "yes", "hotel-stars": "4",
       "hotel-name": "acorn guest house", "hotel-book_people": "8",
       "hotel-book_day": "sunday", "hotel-book_stay": "5"},
      jblock({"hotel-name": "Acorn Guest House", "hotel-area": "north", "hotel-parking": "yes",
              "hotel-pricerange": "moderate", "hotel-stars": "4", "hotel-internet": "yes",
              "hotel-type": "guest house", "hotel-book_people": "8",
              "hotel-book_day": "sunday", "hotel-book_stay": "5"})),
])

PMUL0599 = d("PMUL0599", ["restaurant"], [
    t("",
      "Hello, I am looking for a place to dine in the centre of town.",
      {"restaurant-area": "centre"},
      jblock({"restaurant-area": "centre"})),
    t("There are many great restaurants in the centre. What type of food would you like?",
      "Can you just help me find a high-end Mexican restaurant?",
      {"restaurant-area": "centre", "restaurant-food": "mexican",
       "restaurant-pricerange": "expensive"},
      jblock({"restaurant-food": "mexican", "restaurant-pricerange": "high-end"})),
])

MINI = [PMUL4050, PMUL0117, SNG01873, MUL2051, MUL0524, PMUL4246, MUL2122, MUL2405, MUL2116]
EXTRA = [PMUL0599]


def corpus_json(dialogues):
    out = {"dialogues": []}
    for dlg in dialogues:
        turns = []
        for turn in dlg["turns"]:
            turns.append({"system": turn["system"], "user": turn["user"], "state": turn["state"]})
        out["dialogues"].append({"id": dlg["id"], "domains": dlg["domains"], "turns": turns})
    return out


def transcript_lines(dialogues):
    lines = []
    for dlg in dialogues:
        for i, turn in enumerate(dlg["turns"], start=1):
            prompt = f'"system": {json.dumps(turn["system"])}\n"user": {json.dumps(turn["user"])}'
            rec = {
                "dialogue_id": dlg["id"],
                "turn": i,
                "prompt": prompt,
                "response": turn["response"],
                "model_id": MODEL_ID,
                "timestamp": STAMP,
            }
            lines.append(json.dumps(rec, ensure_ascii=False))
    return lines


def write(path, text):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    print(f"wrote {path}")


def main():
    write(os.path.join(OUT, "corpus.mini.json"),
          json.dumps(corpus_json(MINI), indent=2, ensure_ascii=False) + "\n")
    write(os.path.join(OUT, "corpus.extra.json"),
          json.dumps(corpus_json(EXTRA), indent=2, ensure_ascii=False) + "\n")
    write(os.path.join(OUT, "transcripts.mini.jsonl"),
          "\n".join(transcript_lines(MINI)) + "\n")
    write(os.path.join(OUT, "transcripts.extra.jsonl"),
          "\n".join(transcript_lines(EXTRA)) + "\n")


if __name__ == "__main__":
    main()
