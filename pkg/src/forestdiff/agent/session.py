"""Per-conversation state: loaded data, derived artifacts, transcript."""

import hashlib
import threading

from ..latent import MatchParams


class Session:
    """Everything a conversation can touch. One lock per session keeps tool
    executions serialized without blocking other sessions."""

    def __init__(self, session_id):
        self.id = session_id
        self.pair = None  # BitemporalPair (carries optional ground truth)
        self.precomputed_pred = None  # ChangeMask uploaded alongside the pair
        self.human_caption = None
        self.proposals = None  # ProposalFile
        self.last_mask = None  # ChangeMask
        self.last_captions = None  # CaptionSet
        self.match_params = MatchParams()
        self.transcript = []  # append-only {role, content} dicts
        self.artifacts = {}  # name -> (bytes, content_type)
        self.lock = threading.Lock()

    def store_artifact(self, kind, data, ext, content_type):
        """Content-addressed artifact name; identical payloads dedupe."""
        digest = hashlib.sha256(data).hexdigest()[:12]
        name = "%s-%s.%s" % (kind, digest, ext)
        self.artifacts[name] = (data, content_type)
        return name

    def state_line(self):
        """Machine-readable summary the backends can plan from."""
        flags = (
            ("pair", self.pair is not None),
            ("proposals", self.proposals is not None),
            ("mask", self.last_mask is not None),
            ("gt", self.pair is not None and self.pair.ground_truth is not None),
            ("precomputed", self.precomputed_pred is not None),
            ("human_caption", self.human_caption is not None),
        )
        return "state: " + " ".join("%s=%s" % (k, "yes" if v else "no")
                                    for k, v in flags)
