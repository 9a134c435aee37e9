import { ApiClient } from "./api.js";
import { ChatView } from "./chat.js";

const api = new ApiClient("");
const view = new ChatView(document.getElementById("app")!, api);

const saved = sessionStorage.getItem("ontoquery-session");
if (saved) {
  view.restore(saved).catch(() => startFresh());
} else {
  startFresh();
}

function startFresh(): void {
  view
    .start()
    .then((id) => sessionStorage.setItem("ontoquery-session", id))
    .catch(() => setTimeout(startFresh, 2000));
}
