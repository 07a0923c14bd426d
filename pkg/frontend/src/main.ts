import { mount } from "./app.js";

const root = document.getElementById("app");
if (root) {
  const tokenInput = document.getElementById("token") as HTMLInputElement | null;
  const app = mount(root, tokenInput?.value ?? "");
  tokenInput?.addEventListener("change", () => {
    app.setToken(tokenInput.value);
    void app.render();
  });
}
